"""Command-line entry point for hullcert."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

# Add the project root to Python path
project_root = str(Path(__file__).parent)
if project_root not in sys.path:
    sys.path.append(project_root)

from src.bounds.certificate import certificate
from src.bounds.complexity import (RateCurve, chaining_terms, dudley_integral, rate_reference,
                                   separated_moduli, sudakov_ratio, unit_diameter)
from src.bounds.fixed_point import (solve_r, solve_rent, solve_U, solve_Uent,
                                    solve_zero_error)
from src.classes.classdata import SampledClass, load_class_csv, load_vector_csv, save_class_csv
from src.classes.generators import GeneratorSpec, generate
from src.classes.nets import covering_curve, dyadic_grid, parse_grid
from src.config import DEFAULT_DRAWS, DEFAULT_SEED, DEFAULT_THREADS, OUTPUT_DIR
from src.experiments.erm_trials import ERM_FIT_TOL, build_psi
from src.experiments.experiment_config import ExperimentConfig, load_config
from src.experiments.utils.report_writer import ReportWriter
from src.main import initialize_components, setup_environment
from src.processes.hullopt import FrozenHullRademacherOracle, erm_convex_hull, modulus_convex_hull
from src.processes.process import FrozenRademacherOracle, gaussian_sup_finite, modulus_finite

logger = logging.getLogger(__name__)

EXPERIMENT_COMMANDS = ("theorem1-check", "rates", "trials", "calibrate")


def _parse_bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"Expected a boolean, got {value}")


def _add_class_args(parser: argparse.ArgumentParser) -> None:
    """Either an input CSV or generator parameters."""
    parser.add_argument('--class', '--input', dest='class_file', type=str,
                        help='CSV with one function per row')
    parser.add_argument('--range-checked', type=_parse_bool, nargs='?', const=True, default=True,
                        help='Require values in [0, 1]')
    parser.add_argument('--kind', type=str,
                        choices=['singleton', 'two_point', 'segment', 'ball',
                                 'interval_indicators', 'lattice_holder'],
                        help='Generator kind when no CSV is given')
    parser.add_argument('--m', type=int, default=2, help='Number of functions')
    parser.add_argument('--n', type=int, default=100, help='Sample size')
    parser.add_argument('--d', type=int, default=2, help='Ball dimension')
    parser.add_argument('--V', type=float, default=1.0, help='Lattice entropy exponent')
    parser.add_argument('--levels', type=int, default=64, help='Lattice levels')
    parser.add_argument('--distance', type=float, default=1.0, help='Two-point distance')
    parser.add_argument('--gen-seed', type=int, help='Generator seed (defaults to --seed)')


def _generator_spec(args: argparse.Namespace) -> Optional[GeneratorSpec]:
    if not getattr(args, 'kind', None):
        return None
    seed = next(s for s in (args.gen_seed, args.seed, DEFAULT_SEED) if s is not None)
    return GeneratorSpec(kind=args.kind, m=args.m, n=args.n, d=args.d, V=args.V,
                         levels=args.levels, distance=args.distance, seed=seed,
                         range_checked=args.range_checked)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values overridden by every flag given on the command line."""
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {
        'seed': args.seed, 'threads': args.threads, 'out_dir': args.out_dir, 'draws': args.draws,
        'experiment': args.command if args.command in EXPERIMENT_COMMANDS else None,
    }
    for key in ('t', 'trials', 'n_holdout', 'support', 'psi_method', 'target_coverage',
                'delta_grid', 'eps_grid', 'psi_grid', 'profile_path'):
        overrides[key] = getattr(args, key, None)
    if getattr(args, 'n_grid', None):
        overrides['n_grid'] = [int(v) for v in parse_grid(args.n_grid)]
    if getattr(args, 'check_coverage', False):
        overrides['check_coverage'] = True
    if getattr(args, 'plots', False):
        overrides['plots'] = True
    if getattr(args, 'class_file', None):
        overrides['class_file'] = args.class_file
        overrides['range_checked'] = args.range_checked
    spec = _generator_spec(args) if hasattr(args, 'kind') else None
    if spec is not None:
        overrides['generators'] = [spec.model_dump()]
    return config.with_overrides(**overrides)


def _load_class(args: argparse.Namespace, config: ExperimentConfig) -> SampledClass:
    if args.class_file:
        return load_class_csv(args.class_file, assert_range_01=args.range_checked)
    classes = config.classes()
    if len(classes) > 1:
        logger.warning(f"Config names {len(classes)} classes; using '{classes[0].label}'")
    return classes[0]


def _provenance(config: ExperimentConfig) -> dict:
    return {'seed': config.seed, 'draws': config.draws, 'config_hash': config.config_hash()}


def run_generate(args, config, writer) -> int:
    spec = _generator_spec(args)
    if spec is None:
        raise ValueError("generate needs --kind")
    F = generate(spec)
    path = Path(args.out) if args.out else writer.out_dir / f"{spec.kind}_seed{spec.seed}.csv"
    save_class_csv(F, path)
    writer.write_json(f"{path.stem}_spec", {'spec': spec.model_dump(mode='json'),
                                            'label': F.label, **_provenance(config)})
    return 0


def run_cover(args, config, writer) -> int:
    F = _load_class(args, config)
    cov = covering_curve(F, config.eps_values(F))
    writer.write_frame(f"cover_{args.name}", cov.to_frame(), label=F.label, **_provenance(config))
    return 0


def run_modulus(args, config, writer) -> int:
    F = _load_class(args, config)
    deltas = config.delta_values(F)
    if args.hull:
        curve = modulus_convex_hull(F, deltas, config.draws, config.seed, n_jobs=config.threads)
    else:
        curve = modulus_finite(F, deltas, config.draws, config.seed, n_jobs=config.threads)
    frame = curve.to_frame()
    writer.write_frame(f"modulus_{args.name}", frame, label=curve.label,
                       solver_soft_failures=curve.failures, **_provenance(config))
    return 0


def run_entropy_bound(args, config, writer) -> int:
    """Chaining and Dudley entropy quantities of a class at dyadic scales."""
    F = unit_diameter(_load_class(args, config))
    k_max = args.depth
    knots = [2.0 ** (1 - i) for i in range(k_max + 1)]
    mod = modulus_finite(F, knots, config.draws, config.seed, n_jobs=config.threads)
    lif = chaining_terms(mod, k_max, "lif")
    lif2 = chaining_terms(separated_moduli(F, k_max, config.draws, config.seed, config.threads),
                          k_max, "lif2")
    cov = covering_curve(F, dyadic_grid(0, k_max + 1))
    reference = RateCurve("hullentropy_ex1", V=args.reference_V) if args.reference_V else None

    rows = []
    for k in range(k_max + 1):
        x = 2.0 ** -k
        ref = rate_reference(reference, x) if reference is not None and x <= reference.x_max else np.nan
        rows.append({'x': x, 'lif_term': lif[k], 'lif2_term': lif2[k],
                     'measured': float(sum(lif[:k + 1])) ** 2,
                     'measured_lif2': float(sum(lif2[:k + 1])) ** 2,
                     'covering_entropy': float(cov.entropies[k]),
                     'dudley': dudley_integral(cov, 0.0, x),
                     'reference': ref})
    writer.write_rows(f"entropy_bound_{args.name}", rows, config)
    summary = {'label': F.label, 'depth': k_max, **_provenance(config)}
    est, _ = gaussian_sup_finite(F, config.draws, config.seed, n_jobs=config.threads)
    if est > 0:
        summary['sudakov_ratio'] = sudakov_ratio(cov, est)
    writer.write_json(f"entropy_bound_{args.name}", summary)
    return 0


def run_fixpoint(args, config, writer) -> int:
    G = _load_class(args, config)
    equation = args.equation
    if equation == 'uo':
        result = solve_zero_error(build_psi(G, config, config.seed))
    elif equation in ('u', 'r'):
        if args.hull:
            oracle = FrozenHullRademacherOracle(G, config.draws, config.seed, n_jobs=config.threads)
        else:
            oracle = FrozenRademacherOracle(G, config.draws, config.seed, n_jobs=config.threads)
        solver = solve_U if equation == 'u' else solve_r
        result = solver(args.delta, config.t, G.n, oracle)
    else:
        psi = build_psi(G, config, config.seed)
        solver = solve_Uent if equation == 'uent' else solve_rent
        result = solver(args.delta, config.t, G.n, psi, config.profile(), form=args.form)
    writer.write_json(f"fixpoint_{equation}_{args.name}", {
        'equation': result.equation, 'value': result.value, 'iterations': result.iterations,
        'residual': result.residual, 'components': result.components, 'delta': args.delta,
        't': config.t, 'n': G.n, 'class': G.label, 'psi_method': config.psi_method,
        **_provenance(config)})
    print(f"{result.equation} = {result.value:.10g}")
    return 0


def run_erm(args, config, writer) -> int:
    G = _load_class(args, config)
    y = load_vector_csv(args.target)
    solution = erm_convex_hull(G, y)
    writer.write_frame(f"erm_{args.name}", _weights_frame(solution.combination.weights),
                       objective=solution.objective_value, **_provenance(config))
    writer.write_json(f"erm_{args.name}", {
        'objective': solution.objective_value, 'iterations': solution.iterations,
        'duality_gap': solution.residual, 'class': G.label, **_provenance(config)})
    print(f"objective = {solution.objective_value:.6g}")
    return 0


def _weights_frame(weights: np.ndarray):
    import pandas as pd

    return pd.DataFrame({'index': np.arange(len(weights)), 'weight': weights})


def run_certify(args, config, writer) -> int:
    G = _load_class(args, config)
    solution = erm_convex_hull(G, load_vector_csv(args.target))
    r_hat = solve_zero_error(build_psi(G, config, config.seed))
    empirical = solution.objective_value if solution.objective_value > ERM_FIT_TOL else None
    cert = certificate(G.label, config.t, G.n, r_hat, config.profile(), empirical_mean=empirical,
                       seed=config.seed)
    writer.write_json(f"certificate_{args.name}", {
        **cert.model_dump(), 'erm_objective': solution.objective_value,
        'psi_method': config.psi_method, **_provenance(config)})
    print(f"certificate = {cert.bound:.6g} ({cert.form})")
    return 0


def run_experiment(args, config, writer) -> int:
    experiment = initialize_components().get_experiment(args.command)
    report = experiment.run(config, writer)
    for name, ok in sorted(report.checks.items()):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return 0 if report.passed else 1


HANDLERS = {
    'generate': run_generate,
    'cover': run_cover,
    'modulus': run_modulus,
    'entropy-bound': run_entropy_bound,
    'fixpoint': run_fixpoint,
    'erm': run_erm,
    'certify': run_certify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='hullcert - complexity of convex hulls and ERM certificates')
    parser.add_argument('--seed', type=int, help=f'Run seed (default {DEFAULT_SEED})')
    parser.add_argument('--threads', type=int, help=f'Worker threads (default {DEFAULT_THREADS})')
    parser.add_argument('--out-dir', type=str, help=f'Output directory (default {OUTPUT_DIR})')
    parser.add_argument('--config', type=str, help='JSON or TOML experiment config')
    parser.add_argument('--draws', type=int, help=f'Monte Carlo draws (default {DEFAULT_DRAWS})')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', help='Generate a synthetic class')
    _add_class_args(p)
    p.add_argument('--out', type=str, help='Output CSV path')

    for name, help_text in (('cover', 'Covering curve of a class'),
                            ('modulus', 'Modulus of the isonormal process'),
                            ('entropy-bound', 'Chaining and Dudley entropy quantities'),
                            ('fixpoint', 'Solve one fixed-point equation'),
                            ('erm', 'ERM over the convex hull'),
                            ('certify', 'ERM plus generalization certificate')):
        p = sub.add_parser(name, help=help_text)
        _add_class_args(p)
        p.add_argument('--name', type=str, default='run', help='Artifact name suffix')
        p.add_argument('--eps-grid', dest='eps_grid', type=str, help="e.g. 'geometric:1:0.02:14'")
        p.add_argument('--deltas', dest='delta_grid', type=str, help="e.g. '0.1,0.2,0.5'")
        p.add_argument('--psi-grid', dest='psi_grid', type=str, help='Grid of psi knots')
        p.add_argument('--psi-method', dest='psi_method', type=str,
                       choices=['theorem1', 'entropy_integral', 'direct_mc'])
        p.add_argument('--profile', dest='profile_path', type=str, help='Constants profile JSON')
        p.add_argument('--t', type=float, help='Confidence parameter')
        if name == 'modulus' or name == 'fixpoint':
            p.add_argument('--hull', type=_parse_bool, nargs='?', const=True, default=False,
                           help='Use the convex hull of the class')
        if name == 'entropy-bound':
            p.add_argument('--depth', type=int, default=8, help='Number of dyadic levels')
            p.add_argument('--reference-V', dest='reference_V', type=float,
                           help='Covering exponent of the reference curve')
        if name == 'fixpoint':
            p.add_argument('--equation', type=str, required=True,
                           choices=['uo', 'u', 'r', 'uent', 'rent'])
            p.add_argument('--delta', type=float, default=0.1, help='Radius in (0, 1]')
            p.add_argument('--form', type=str, default='simplified', choices=['simplified', 'full'])
        if name in ('erm', 'certify'):
            p.add_argument('--target', type=str, required=True, help='CSV with target values')

    for name, help_text in (('theorem1-check', 'Verify the convex-hull modulus bound'),
                            ('rates', 'Fit exponents against reference rates'),
                            ('trials', 'ERM trials with certificates'),
                            ('calibrate', 'Calibrate the certificate constant')):
        p = sub.add_parser(name, help=help_text)
        _add_class_args(p)
        p.add_argument('--eps-grid', dest='eps_grid', type=str)
        p.add_argument('--deltas', dest='delta_grid', type=str)
        p.add_argument('--psi-grid', dest='psi_grid', type=str)
        p.add_argument('--psi-method', dest='psi_method', type=str,
                       choices=['theorem1', 'entropy_integral', 'direct_mc'])
        p.add_argument('--profile', dest='profile_path', type=str)
        p.add_argument('--t', type=float)
        p.add_argument('--trials', type=int)
        p.add_argument('--n-holdout', dest='n_holdout', type=int)
        p.add_argument('--support', type=int, help='Support size of random targets')
        p.add_argument('--n-grid', dest='n_grid', type=str, help="e.g. '128,256,512'")
        p.add_argument('--target-coverage', dest='target_coverage', type=float)
        p.add_argument('--check-coverage', action='store_true')
        p.add_argument('--plots', action='store_true', help='Write SVG plots')
    return parser


def main(argv: Optional[list] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        out_dir = setup_environment(config.out_dir, debug=args.debug)
        writer = ReportWriter(out_dir)
        if args.command in EXPERIMENT_COMMANDS:
            return run_experiment(args, config, writer)
        return HANDLERS[args.command](args, config, writer)
    except Exception as e:
        logger.error(f"Fatal error: {str(e)}")
        print(f"Error: {str(e)}. Please check the log file for details.")
        return 1


if __name__ == "__main__":
    sys.exit(main())
