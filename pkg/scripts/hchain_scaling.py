"""
Resource scaling over the synthetic hydrogen-chain family using multiple
cores.  Each chain is built, mapped to Pauli terms and costed with every
method; chains small enough for dense simulation also get a fitted C_gs.
"""
import argparse
from multiprocessing import Pool

from pfqpe.hamiltonian import hydrogen_chain_tensors, majorana_pauli_decompose
from pfqpe.pauli_core import weight_lambda
from pfqpe.resources import (CostModelInputs, average_support, deterministic_cost,
                             fit_cost_scaling, randomized_cost, sweep_partition)
from pfqpe.simulator import DENSE_LIMIT
from pfqpe.trotter_fit import default_delta_grid, measure_error_curve, trotter_constants
from pfqpe.writer import RecordWriter


def process(task):
    n_atoms, spacing, epsilon, C_gs = task
    H = majorana_pauli_decompose(hydrogen_chain_tensors(n_atoms, spacing))
    lam = weight_lambda(H)
    if C_gs is None and H.n_qubits <= DENSE_LIMIT:
        curve = measure_error_curve(H, 2, default_delta_grid(lam, per_decade=4))
        C_gs, _ = trotter_constants(curve)
    rows = []
    base = {'n_atoms': n_atoms, 'n_qubits': H.n_qubits, 'lambda': lam, 'L': len(H.terms),
            'C_gs': C_gs}
    for method in ('qdrift', 'rte'):
        report = randomized_cost(lam, epsilon, 1.0, method, n_qubits=H.n_qubits,
                                 avg_support=average_support(H))
        rows.append(dict(base, method=method, toffoli=report.toffoli_total))
    if C_gs:
        inputs = CostModelInputs(lam, len(H.terms), C_gs, epsilon=epsilon,
                                 avg_support=average_support(H), n_qubits=H.n_qubits)
        rows.append(dict(base, method='deterministic', toffoli=deterministic_cost(inputs).toffoli_total))
        best, report = sweep_partition(H, C_gs, epsilon)
        rows.append(dict(base, method='partial', L_D=best, toffoli=report.toffoli_total))
    print("Finished chain of {} atoms ({} terms)".format(n_atoms, len(H.terms)))
    return rows


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Cost scaling over hydrogen chains.')
    parser.add_argument('--atoms', type=int, nargs='+', default=[2, 3, 4, 5, 6])
    parser.add_argument('--spacing', type=float, default=1.4)
    parser.add_argument('--epsilon', type=float, default=1.5e-3)
    parser.add_argument('--C-gs', dest='C_gs', type=float, default=None,
                        help='<optional> fixed Trotter constant instead of fitting')
    parser.add_argument('--processes', type=int, default=4)
    parser.add_argument('-o', dest='outfile', default='hchain-scaling.csv')
    args = parser.parse_args()

    tasks = [(n, args.spacing, args.epsilon, args.C_gs) for n in args.atoms]
    with Pool(processes=args.processes) as pool:
        results = pool.map(process, tasks)
    rows = [row for chunk in results for row in chunk]

    for method in ('qdrift', 'rte', 'deterministic', 'partial'):
        subset = [r for r in rows if r['method'] == method and r['toffoli'] > 0]
        if len(subset) >= 2:
            C, a, _ = fit_cost_scaling([r['n_atoms'] for r in subset], [args.epsilon] * len(subset),
                                       [r['toffoli'] for r in subset])
            print("{}: Toffoli ~ {:.3g} N^{:.3f}".format(method, C, a))

    RecordWriter(vars(args)).write_to_csv(args.outfile, rows)
