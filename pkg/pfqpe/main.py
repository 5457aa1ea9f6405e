from pfqpe.estimation import METHODS, RPEConfig, rpe_run
from pfqpe.hamiltonian import (LambdaOptConfig, double_factorize, hartree_fock_state_index,
                               load_pauli_file, load_tensor_file, majorana_pauli_decompose,
                               optimize_lambda, pauli_weight, save_pauli_file)
from pfqpe.pauli_core import combine_terms, lexicographic_sort, truncate, weight_lambda
from pfqpe.resources import (CostModelInputs, average_support, deterministic_cost, df_cost,
                             gate_models, partial_cost, randomized_cost, sweep_partition,
                             angle_bits, EPS_SYNTH, EPS_TOFFOLI, EPS_TWO_QUBIT)
from pfqpe.simulator import StateVector, ground_state, sector_ground_state
from pfqpe.trotter_fit import (default_delta_grid, fit_power_law, measure_error_curve,
                               partial_error_sweep, trotter_constants)
from pfqpe.utils import (ConfigError, DimensionError, InfeasibleError, ParseError,
                         PfqpeError, spawn_seeds)
from pfqpe.writer import RecordWriter
from multiprocessing import Pool
import argparse
import json
import numpy as np
import os
import sys
import time
import warnings


EXIT_CODES = ((ParseError, 4), (OSError, 4), (ConfigError, 2), (DimensionError, 2),
              (InfeasibleError, 3))


def load_hamiltonian(path):
    """
    Load a Pauli or tensor file.
    @param path:  file ending in .tensors (fermionic tensors) or anything else (Pauli terms)
    @return:  (PauliHamiltonian, FermionTensors or None)
    """
    if not os.path.exists(path):
        raise OSError("there is no file {}".format(path))
    if path.endswith('.tensors'):
        tensors = load_tensor_file(path)
        return majorana_pauli_decompose(tensors), tensors
    return load_pauli_file(path), None


def ingest(infile, outfile=None, truncate_weight=0.0, combine=False, sort=False,
           double_factorize_tensors=False, optimize=False, optimize_shift=False,
           max_iter=200, verbose=True):
    """
    Load a Hamiltonian, apply the requested transforms and save it as a Pauli file.

    :return:  (PauliHamiltonian, FactorizedHamiltonian or None)
    """
    H, tensors = load_hamiltonian(infile)
    if verbose:
        print("Loaded {} terms from file {}.".format(len(H.terms), infile))
    factors = None
    if tensors is not None:
        if optimize or optimize_shift:
            lam_before = pauli_weight(tensors)
            tensors, history = optimize_lambda(
                tensors, LambdaOptConfig(max_iter=max_iter, optimize_shift=optimize_shift))
            H = majorana_pauli_decompose(tensors)
            if verbose:
                print("Orbital optimization: lambda {:.6g} -> {:.6g} after {} accepted steps".format(
                    lam_before, history[-1], len(history) - 1))
        if double_factorize_tensors:
            factors = double_factorize(tensors)
    elif optimize or optimize_shift or double_factorize_tensors:
        raise ConfigError("orbital transforms need a tensor file, got {}".format(infile))
    if combine:
        H = combine_terms(H)
    if truncate_weight > 0:
        H = truncate(H, truncate_weight)
    if sort:
        H = lexicographic_sort(H)
    if outfile is not None:
        save_pauli_file(H, outfile)
        if verbose:
            print("Saved {} terms to file {}".format(len(H.terms), outfile))
    return H, factors


def _guiding_state(H, tensors, state, n_electrons, rng):
    """(E0, psi) with E0 from dense diagonalisation, in the electron sector when known."""
    if tensors is not None and n_electrons is None:
        n_electrons = tensors.n_electrons
    if n_electrons is not None:
        E0, ground = sector_ground_state(H, n_electrons)
    else:
        E0, ground = ground_state(H)
    if state == 'ground':
        return E0, ground
    if state == 'hf':
        if n_electrons is None:
            raise ConfigError("a Hartree-Fock state needs the electron count")
        return E0, StateVector.basis(H.n_qubits, hartree_fock_state_index(H.n_qubits, n_electrons))
    if state == 'random':
        return E0, StateVector.random(H.n_qubits, rng)
    raise ConfigError("unknown guiding state {!r}".format(state))


def _rpe_task(task):
    H, psi, config_kwargs, child, index, E0 = task
    result = rpe_run(H, psi, RPEConfig.from_target(seed=child, **config_kwargs))
    return index, result, E0


def run_rpe(infile, method='exact', epsilon=None, eps_rel=5e-3, xi=1.0, seeds=10, seed=0,
            state='ground', n_electrons=None, p=2, delta=None, L_D=None, kappa=2.0, n_max=8,
            mode=None, threads=1, verbose=True):
    """
    Run robust phase estimation once per child seed.

    @return:  (list of (index, RPEResult, E0), epsilon)
    """
    if method == 'exact-evolution':
        method = 'exact'
    H, tensors = load_hamiltonian(infile)
    lam = weight_lambda(H)
    epsilon = eps_rel * lam if epsilon is None else epsilon
    if method in ('trotter', 'partial') and delta is None:
        raise ConfigError("method {} needs --delta".format(method))
    children = spawn_seeds(seed, seeds + 1)
    E0, psi = _guiding_state(H, tensors, state, n_electrons, np.random.default_rng(children[-1]))
    if verbose:
        print("Running {} RPE on {} qubits, lambda = {:.6g}, eps = {:.6g}, {} seeds".format(
            method, H.n_qubits, lam, epsilon, seeds))
    # trotter and partial runs count time in steps of delta; the target sets their rounds
    scale = lam if method in ('exact', 'qdrift', 'rte') else 1.0 / delta
    config_kwargs = dict(lam=scale, epsilon=epsilon, xi=xi, method=method, p=p, delta=delta,
                         L_D=L_D, kappa=kappa, n_max=n_max, mode=mode)
    tasks = [(H, psi, config_kwargs, children[k], k, E0) for k in range(seeds)]
    if threads > 1:
        with Pool(processes=threads) as pool:
            results = pool.map(_rpe_task, tasks)
    else:
        results = [_rpe_task(t) for t in tasks]
    return sorted(results, key=lambda r: r[0]), epsilon


def trotter_fit(infile, orders=(2,), low=-2.5, high=-0.5, per_decade=12, partial=None, verbose=True):
    """
    Error curves and power-law fits per formula order.

    @return:  list of records
    """
    H, _ = load_hamiltonian(infile)
    grid = default_delta_grid(weight_lambda(H), per_decade, low, high)
    writer = RecordWriter(verbose=False)
    records = []
    for p in orders:
        curve = measure_error_curve(H, p, grid)
        records.extend(writer.formatCurve(curve))
        for quantity, errors in (('gs', curve.gs_errors), ('op', curve.op_errors)):
            if np.all(errors > 0):
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter('always')
                    fit = fit_power_law(curve.deltas, errors)
                for w in caught if verbose else ():
                    print("Warning: {}".format(w.message))
                records.append(writer.formatFit(fit, p, quantity))
        C_gs, C_op = trotter_constants(curve, p)
        records.append({'kind': 'constants', 'p': p, 'C_gs': C_gs, 'C_op': C_op})
        if verbose:
            print("p = {}: C_gs = {:.6g}, C_op = {:.6g}".format(p, C_gs, C_op))
    if partial:
        for p in orders:
            frame = partial_error_sweep(H, p, partial, grid)
            for row in frame.to_dict('records'):
                row.update({'kind': 'partial', 'p': p})
                records.append(row)
    return records


def resources(infile=None, lam=None, L=None, C_gs=None, methods=('deterministic', 'qdrift', 'rte'),
              metric='toffoli', epsilon=None, eps_synth=None, xi=1.0, K=12, p=2, L_D=None,
              lam_R=0.0, n_qubits=0, ranks=None, n_orbitals=None, verbose=True):
    """
    One report row per method; infeasible combinations give a row with an error message.

    @return:  list of records
    """
    H = tensors = None
    support = None
    if infile is not None:
        H, tensors = load_hamiltonian(infile)
        lam, L, n_qubits = weight_lambda(H), len(H.terms), H.n_qubits
        support = average_support(H)
    if lam is None or L is None:
        raise ConfigError("resources need a Hamiltonian file or --lam and --L")
    if epsilon is None:
        epsilon = EPS_TOFFOLI if metric == 'toffoli' else EPS_TWO_QUBIT
    if eps_synth is None:
        eps_synth = EPS_SYNTH if metric == 'toffoli' else 0.0
    writer = RecordWriter(verbose=False)
    records = []
    for method in methods:
        try:
            if method == 'deterministic':
                inputs = CostModelInputs(lam, L, C_gs, p, epsilon, eps_synth, xi,
                                         avg_support=support, n_qubits=n_qubits, K=K)
                report = deterministic_cost(inputs)
            elif method in ('qdrift', 'rte'):
                report = randomized_cost(lam, epsilon, xi, method, K, n_qubits, support)
            elif method == 'partial':
                inputs = CostModelInputs(lam, L, C_gs, p, epsilon, eps_synth, xi, lam_R=lam_R,
                                         L_D=L_D, avg_support=support, n_qubits=n_qubits, K=K)
                if metric == 'toffoli':
                    det = deterministic_cost(CostModelInputs(lam, L, C_gs, p, epsilon, eps_synth))
                    G_det, G_rand = gate_models('toffoli', det.parameters['eps_prime'], K,
                                                angle_bits(lam, epsilon))
                else:
                    G_det, G_rand = gate_models('two-qubit', avg_support=support)
                report = partial_cost(inputs, G_det, G_rand, metric=metric)
            elif method == 'sweep':
                if H is None:
                    raise ConfigError("a partition sweep needs a Hamiltonian file")
                best, _, reports = sweep_partition(H, C_gs, epsilon, metric=metric,
                                                   eps_synth=eps_synth, K=K, p=p, return_all=True)
                for r in reports:
                    row = writer.formatReport(r)
                    row['best'] = r.parameters['L_D'] == best
                    records.append(row)
                if verbose:
                    print("Best partition: L_D = {} of {}".format(best, L))
                continue
            elif method == 'df':
                if ranks is None and tensors is not None:
                    factorization = double_factorize(tensors)
                    ranks, n_orbitals = factorization.ranks, factorization.n_orbitals
                if ranks is None or n_orbitals is None:
                    raise ConfigError("double-factorized counts need --ranks and --orbitals")
                counts = df_cost(n_orbitals, ranks)
                records.append(dict(method='df', **counts._asdict()))
                continue
            else:
                raise ConfigError("unknown method {!r}".format(method))
            records.append(writer.formatReport(report))
        except (InfeasibleError, ConfigError) as err:
            records.append({'method': method, 'error': str(err)})
            if verbose:
                print("Warning: {} row is infeasible: {}".format(method, err))
    return records


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='Root seed (default 0).')
    common.add_argument('--threads', type=int, default=1, help='Worker processes.')
    common.add_argument('--format', choices=['csv', 'json'], default='csv', help='Output format.')
    common.add_argument('--config', default=None,
                        help='<optional> JSON file whose keys override the flags.')
    common.add_argument('-o', dest='outfile', default=None, type=str, help='Output filename.')
    common.add_argument('--quiet', action='store_true', help='Suppress status messages.')
    return common


def parse_args(argv=None):
    """
    CLI argument parser with one sub-command per pipeline.
    :return: args object
    """
    common = _common_options()
    parser = argparse.ArgumentParser(
        description='Product-formula quantum phase estimation: Hamiltonian ingestion, '
                    'simulated phase estimation, Trotter error fits and resource counts.')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p_ingest = sub.add_parser('ingest', parents=[common], help='Load and transform a Hamiltonian.')
    p_ingest.add_argument('infile', help='Pauli file or .tensors file.')
    p_ingest.add_argument('--save', default=None, help='<optional> Path for the transformed Pauli file.')
    p_ingest.add_argument('--truncate', type=float, default=0.0, help='Weight budget of dropped terms.')
    p_ingest.add_argument('--combine', action='store_true', help='Merge repeated Pauli strings.')
    p_ingest.add_argument('--sort', action='store_true', help='Sort terms lexicographically.')
    p_ingest.add_argument('--double-factorize', action='store_true',
                          help='Emit factor eigenvalues (tensor input only).')
    p_ingest.add_argument('--optimize-lambda', action='store_true',
                          help='Lower lambda by orbital rotation (tensor input only).')
    p_ingest.add_argument('--optimize-shift', action='store_true',
                          help='Alternate orbital rotations with symmetry shifts.')
    p_ingest.add_argument('--max-iter', type=int, default=200)

    p_rpe = sub.add_parser('rpe', parents=[common], help='Simulated robust phase estimation.')
    p_rpe.add_argument('infile', help='Pauli file or .tensors file.')
    p_rpe.add_argument('--method', choices=list(METHODS) + ['exact-evolution'], default='exact')
    p_rpe.add_argument('--epsilon', type=float, default=None, help='Target error (absolute).')
    p_rpe.add_argument('--eps-rel', type=float, default=5e-3, help='Target error relative to lambda.')
    p_rpe.add_argument('--xi', type=float, default=1.0)
    p_rpe.add_argument('--seeds', type=int, default=10, help='Number of independent runs.')
    p_rpe.add_argument('--state', choices=['ground', 'hf', 'random'], default='ground')
    p_rpe.add_argument('--electrons', type=int, default=None)
    p_rpe.add_argument('--p', type=int, default=2, help='Formula order for trotter and partial.')
    p_rpe.add_argument('--delta', type=float, default=None)
    p_rpe.add_argument('--L-D', dest='L_D', type=int, default=None)
    p_rpe.add_argument('--kappa', type=float, default=2.0)
    p_rpe.add_argument('--n-max', type=int, default=8)
    p_rpe.add_argument('--mode', choices=['signal', 'exact', 'circuit'], default=None)

    p_fit = sub.add_parser('trotter-fit', parents=[common], help='Trotter error curves and fits.')
    p_fit.add_argument('infile', help='Pauli file or .tensors file.')
    p_fit.add_argument('--p', type=int, nargs='+', default=[2])
    p_fit.add_argument('--low', type=float, default=-2.5, help='log10 of the smallest step times lambda.')
    p_fit.add_argument('--high', type=float, default=-0.5)
    p_fit.add_argument('--per-decade', type=int, default=12)
    p_fit.add_argument('--partial', type=int, nargs='*', default=None,
                       help='<optional> L_D values for the partial-randomization sweep.')

    p_res = sub.add_parser('resources', parents=[common], help='Gate and qubit counts.')
    p_res.add_argument('infile', nargs='?', default=None, help='<optional> Pauli or .tensors file.')
    p_res.add_argument('--lam', type=float, default=None)
    p_res.add_argument('--L', type=int, default=None)
    p_res.add_argument('--C-gs', dest='C_gs', type=float, default=None)
    p_res.add_argument('--methods', nargs='+', default=['deterministic', 'qdrift', 'rte'],
                       choices=['deterministic', 'qdrift', 'rte', 'partial', 'sweep', 'df'])
    p_res.add_argument('--metric', choices=['toffoli', 'two-qubit'], default='toffoli')
    p_res.add_argument('--epsilon', type=float, default=None)
    p_res.add_argument('--eps-synth', type=float, default=None)
    p_res.add_argument('--xi', type=float, default=1.0)
    p_res.add_argument('--K', type=int, default=12)
    p_res.add_argument('--p', type=int, default=2)
    p_res.add_argument('--L-D', dest='L_D', type=int, default=None)
    p_res.add_argument('--lam-R', dest='lam_R', type=float, default=0.0)
    p_res.add_argument('--qubits', type=int, default=0)
    p_res.add_argument('--ranks', type=int, nargs='+', default=None)
    p_res.add_argument('--orbitals', type=int, default=None)

    args = parser.parse_args(argv)
    if args.config is not None:
        apply_config(args, args.config)
    return args


def apply_config(args, path):
    """Keys of the JSON config file override parsed flags."""
    with open(path) as handle:
        try:
            overrides = json.load(handle)
        except ValueError as err:
            raise ParseError("invalid config file: {}".format(err), None, path)
    for key, value in overrides.items():
        name = key.replace('-', '_')
        if not hasattr(args, name) or name == 'command':
            raise ConfigError("unknown config key {!r}".format(key))
        setattr(args, name, value)


def _outfile(args, suffix):
    if args.outfile is not None:
        return args.outfile
    prefix = os.path.splitext(args.infile)[0] if getattr(args, 'infile', None) else 'pfqpe'
    return '{}-{}.{}'.format(prefix, suffix, args.format)


def run(args):
    verbose = not args.quiet
    config = {k: v for k, v in vars(args).items() if k not in ('outfile', 'quiet', 'threads')}
    writer = RecordWriter(config, args.seed, verbose)

    if args.command == 'ingest':
        H, factors = ingest(args.infile, args.save, args.truncate, args.combine, args.sort,
                            args.double_factorize, args.optimize_lambda, args.optimize_shift,
                            args.max_iter, verbose)
        if verbose:
            print("lambda = {:.8g}, L = {}".format(weight_lambda(H), len(H.terms)))
            for row in writer.formatSupportHistogram(H):
                print("  support {support}: {terms} terms".format(**row))
        summary = _outfile(args, 'summary')
        writer.write(summary, writer.formatTerms(H), args.format)
        if factors is not None:
            factor_file = _outfile(args, 'factors') if args.outfile is None \
                else '{}-factors.{}'.format(os.path.splitext(summary)[0], args.format)
            writer.write(factor_file, writer.formatFactorization(factors), args.format)
        return len(H.terms)

    if args.command == 'rpe':
        results, epsilon = run_rpe(args.infile, args.method, args.epsilon, args.eps_rel, args.xi,
                                   args.seeds, args.seed, args.state, args.electrons, args.p,
                                   args.delta, args.L_D, args.kappa, args.n_max, args.mode,
                                   args.threads, verbose)
        rows = [writer.formatEstimate(index, result, E0) for index, result, E0 in results]
        summary = writer.formatSummary([row['error'] for row in rows], epsilon)
        if verbose:
            print("RMSE over {seeds} seeds: {rmse:.6g} (target {target:.6g})".format(**summary))
        for index, result, _ in results:
            rows.extend(writer.formatRounds(result, index))
        rows.append(summary)
        writer.write(_outfile(args, 'rpe'), rows, args.format)
        return len(rows)

    if args.command == 'trotter-fit':
        records = trotter_fit(args.infile, args.p, args.low, args.high, args.per_decade,
                              args.partial, verbose)
        writer.write(_outfile(args, 'trotter'), records, args.format)
        return len(records)

    records = resources(args.infile, args.lam, args.L, args.C_gs, args.methods, args.metric,
                        args.epsilon, args.eps_synth, args.xi, args.K, args.p, args.L_D,
                        args.lam_R, args.qubits, args.ranks, args.orbitals, verbose)
    writer.write(_outfile(args, 'resources'), records, args.format)
    return len(records)


def main(argv=None):
    """
    Main function called from CLI.
    """
    time_start = time.time()
    try:
        args = parse_args(argv)
        count = run(args)
    except PfqpeError as err:
        print("Error: {}".format(err))
        sys.exit(_exit_code(err))
    except OSError as err:
        print("Error: {}".format(err))
        sys.exit(4)
    except ValueError as err:
        print("Error: {}".format(err))
        sys.exit(2)
    time_diff = time.time() - time_start
    if not args.quiet:
        print("Time elapsed: {:{prec}} seconds ({} records)".format(time_diff, count, prec='.5'))


def _exit_code(err):
    for kind, code in EXIT_CODES:
        if isinstance(err, kind):
            return code
    return 1


if __name__ == '__main__':
    main()
