import json

import numpy as np
import pytest

from pfqpe.hamiltonian import load_pauli_file
from pfqpe.main import ingest, main, parse_args, resources, run_rpe
from pfqpe.utils import ConfigError
from pfqpe.writer import read_records


def exit_code(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


def test_ingest_round_trip(tmp_path, data_path):
    source = data_path('h2_reduced.pauli')
    saved = tmp_path / 'copy.pauli'
    summary = tmp_path / 'summary.csv'
    main(['ingest', source, '--save', str(saved), '-o', str(summary), '--quiet'])
    assert load_pauli_file(str(saved)) == load_pauli_file(source)
    _, rows = read_records(str(summary))
    assert [r['pauli'] for r in rows] == ['IZ', 'ZI', 'XX', 'ZZ']


def test_ingest_transforms(data_path):
    H, factors = ingest(data_path('h2_reduced.pauli'), truncate_weight=0.02, sort=True, verbose=False)
    assert [P.letters for P in H.paulis] == ['IZ', 'XX', 'ZI']
    assert factors is None
    with pytest.raises(ConfigError):
        ingest(data_path('h2_reduced.pauli'), double_factorize_tensors=True, verbose=False)


def test_double_factorize_writes_factor_file(tmp_path, data_path):
    out = tmp_path / 'h2.csv'
    main(['ingest', data_path('h2_minimal.tensors'), '--double-factorize', '-o', str(out), '--quiet'])
    _, rows = read_records(str(tmp_path / 'h2-factors.csv'))
    assert rows and {'factor', 'index', 'eigenvalue'} <= set(rows[0])


def test_rpe_is_reproducible(tmp_path, data_path):
    outputs = []
    for name in ('a.csv', 'b.csv'):
        out = tmp_path / name
        main(['rpe', data_path('h2_reduced.pauli'), '--seeds', '3', '--seed', '42', '-o', str(out),
              '--quiet'])
        outputs.append(out.read_text())
    assert outputs[0] == outputs[1]
    meta, rows = read_records(str(tmp_path / 'a.csv'))
    estimates = [r for r in rows if r['kind'] == 'estimate']
    assert meta['seed'] == 42 and len(estimates) == 3
    assert all(r['error'] == pytest.approx(r['estimate'] - r['exact']) for r in estimates)


def test_rpe_records_rounds_and_summary(tmp_path, data_path):
    out = tmp_path / 'rpe.json'
    main(['rpe', data_path('h2_reduced.pauli'), '--seeds', '2', '--format', 'json', '-o', str(out),
          '--quiet'])
    _, rows = read_records(str(out))
    estimates = [r for r in rows if r['kind'] == 'estimate']
    rounds = [r for r in rows if r['kind'] == 'round']
    summary = [r for r in rows if r['kind'] == 'summary']
    assert len(estimates) == 2 and len(summary) == 1
    assert sorted({r['seed'] for r in rounds}) == [0, 1]
    first = [r for r in rounds if r['seed'] == 0]
    assert [r['round'] for r in first] == list(range(len(first)))
    assert all(r['samples'] >= 1 and -np.pi <= r['angle'] <= np.pi for r in first)
    errors = np.array([r['error'] for r in estimates])
    assert summary[0]['seeds'] == 2
    assert summary[0]['rmse'] == pytest.approx(np.sqrt(np.mean(errors ** 2)))
    assert summary[0]['target'] > 0


def test_rpe_methods_agree_with_ground_energy(data_path):
    results, eps = run_rpe(data_path('h2_minimal.tensors'), method='rte', eps_rel=0.01, seeds=4,
                           verbose=False)
    errors = np.array([result.estimate - E0 for _, result, E0 in results])
    assert np.sqrt(np.mean(errors ** 2)) < 3 * eps
    assert abs(results[0][2] - (-1.13724)) < 1e-3


def test_trotter_fit_records(tmp_path, data_path):
    out = tmp_path / 'fit.json'
    main(['trotter-fit', data_path('h2_reduced.pauli'), '--format', 'json', '-o', str(out), '--quiet'])
    _, rows = read_records(str(out))
    constants = [r for r in rows if r['kind'] == 'constants']
    assert len(constants) == 1 and constants[0]['C_gs'] > 0
    assert sum(r['kind'] == 'curve' for r in rows) == 25


def test_resources_femoco_row(tmp_path):
    out = tmp_path / 'res.csv'
    main(['resources', '--lam', '405', '--L', '1000', '--epsilon', '0.0016', '--xi', '0.1',
          '--methods', 'qdrift', 'rte', '-o', str(out), '--quiet'])
    _, rows = read_records(str(out))
    qdrift = rows[0]
    assert qdrift['method'] == 'qdrift'
    assert qdrift['rotations_max'] == 640747969
    assert qdrift['M'] == 15 and qdrift['K_M'] == 25313


def test_resources_reports_infeasible_rows():
    records = resources(lam=10.0, L=20, methods=('deterministic', 'df'), verbose=False)
    assert all('error' in r for r in records)


def test_config_file_overrides_flags(tmp_path, data_path):
    config = tmp_path / 'run.json'
    config.write_text(json.dumps({'seeds': 2, 'eps-rel': 0.02}))
    args = parse_args(['rpe', data_path('h2_reduced.pauli'), '--seeds', '5', '--config', str(config)])
    assert args.seeds == 2 and args.eps_rel == 0.02
    config.write_text(json.dumps({'colour': 'red'}))
    assert exit_code(['rpe', data_path('h2_reduced.pauli'), '--config', str(config)]) == 2


def test_exit_codes(tmp_path, data_path):
    assert exit_code(['rpe', str(tmp_path / 'missing.pauli'), '--quiet']) == 4
    bad = tmp_path / 'bad.pauli'
    bad.write_text('qubits 2\n1.0 XQ\n')
    assert exit_code(['ingest', str(bad), '--quiet']) == 4
    assert exit_code(['rpe', data_path('h2_reduced.pauli'), '--method', 'trotter', '--quiet']) == 2
    assert exit_code(['trotter-fit', data_path('h2_reduced.pauli'), '--low', '0.5', '--high', '1.0',
                      '--per-decade', '2', '-o', str(tmp_path / 'x.csv'), '--quiet']) == 3
