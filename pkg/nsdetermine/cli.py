"""
Командная строка: `simulate`, `twin`, `estimates`, `certify`, `gronwall`.

Коды возврата: 0 - успех, 2 - нарушена оценка или решения не сблизились,
3 - потеря устойчивости, 4 - ошибка конфигурации.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from nsdetermine.experiments import ExperimentConfig, certify_projection, estimate_suite, suite_frame, twin_run
from nsdetermine.gronwall import check_dominated, gronwall_classical, gronwall_generalized_check
from nsdetermine.session import Session, load_config
from nsdetermine.solver import integrate
from nsdetermine.utils import (BlowUpError, ConfigError, DegenerateDataError, InsufficientHorizonError,
                               PreconditionError, ResolutionMismatchError, ViscosityModelError, pd)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_BLOWUP = 3
EXIT_CONFIG = 4

_CONFIG_ERRORS = (ConfigError, PreconditionError, ViscosityModelError, InsufficientHorizonError,
                  DegenerateDataError, ResolutionMismatchError)


def _experiment(args: argparse.Namespace, required: bool = True) -> ExperimentConfig:
    if args.config is None:
        if required:
            raise ConfigError(f"`{args.command}` requires --config")
        data = {'solver': {'resolution': 128, 'dt': 1.0, 't_end': 1.0}, 'viscosity': {'kind': 'constant', 'nu0': 1.0}}
    else:
        data = load_config(args.config)
    solver = data.setdefault('solver', {})
    if args.seed is not None:
        data['seed'] = args.seed
    if args.resolution is not None:
        solver['resolution'] = args.resolution
    if args.dt is not None:
        solver['dt'] = args.dt
    if args.horizon is not None:
        solver['t_end'] = args.horizon
    return ExperimentConfig.from_dict(data)


def _simulate(args: argparse.Namespace, session: Session) -> int:
    config = _experiment(args)
    with session as collector:
        collector.write_record('trajectory', integrate(config.solver))
    return EXIT_OK


def _twin(args: argparse.Namespace, session: Session) -> int:
    report = twin_run(_experiment(args))
    with session as collector:
        collector.write_json('twin.json', report)
        collector.write_frame('twin.csv', report.frame(), report.config)
    return EXIT_OK if report.determined else EXIT_VIOLATION


def _estimates(args: argparse.Namespace, session: Session) -> int:
    config = _experiment(args)
    record, reports = estimate_suite(config)
    with session as collector:
        collector.write_record('trajectory', record)
        collector.write_json('estimates.json', reports)
        collector.write_frame('estimates.csv', suite_frame(reports), config.to_dict())
    return EXIT_OK if all(report.satisfied for report in reports) else EXIT_VIOLATION


def _certify(args: argparse.Namespace, session: Session) -> int:
    config = _experiment(args, required=False)
    with session as collector:
        certify_projection(config, collector)
    return EXIT_OK


def _gronwall(args: argparse.Namespace, session: Session) -> int:
    if args.series is None:
        raise ConfigError("`gronwall` requires --series")
    try:
        frame = pd.read_csv(args.series, comment='#')
    except OSError as exc:
        raise ConfigError(f"Cannot read series `{args.series}`: {exc.strerror}") from None
    if missing := {'time', 'alpha', 'beta', 'y'} - set(frame.columns):
        raise ConfigError(f"Series file lacks columns {sorted(missing)}")
    grid, alpha, beta, y = (frame[name].to_numpy(dtype=float) for name in ('time', 'alpha', 'beta', 'y'))
    verdict = gronwall_generalized_check(alpha, beta, y, args.averaging_time, grid, threshold=args.threshold)
    result = {'generalized': verdict.to_dict()}
    status = EXIT_OK
    if np.all(alpha >= 0.0) and np.all(beta >= 0.0):
        bound = gronwall_classical(y[0], alpha, beta, grid)
        dominated = check_dominated(y, bound, args.tolerance)
        result['classical'] = {'dominated': dominated, 'max_excess': float(np.max(y - bound))}
        status = EXIT_OK if dominated else EXIT_VIOLATION
    else:
        logger.info("Classical bound skipped: alpha or beta takes negative values")
    with session as collector:
        collector.write_json('gronwall.json', result)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='nsdetermine',
                                     description='Determining projections for the 2D periodic Navier-Stokes equations')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='TOML experiment config')
    common.add_argument('--seed', type=int, help='override the config seed')
    common.add_argument('--out', default=None, help='output directory')
    common.add_argument('--resolution', type=int, help='override solver.resolution')
    common.add_argument('--dt', type=float, help='override solver.dt')
    common.add_argument('--horizon', type=float, help='override solver.t_end')
    common.add_argument('--snapshot-format', choices=('csv', 'bin'), default='csv')
    common.add_argument('-v', '--verbose', action='count', default=0)
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('simulate', parents=[common], help='single run: trajectory CSV and snapshots')
    commands.add_parser('twin', parents=[common], help='twin-solution determining test')
    commands.add_parser('estimates', parents=[common], help='a priori estimate suite')
    commands.add_parser('certify', parents=[common], help='certify approximation constants (C1, gamma)')
    gronwall = commands.add_parser('gronwall', parents=[common], help='Gronwall checks of a series file')
    gronwall.add_argument('--series', help='CSV with columns time, alpha, beta, y')
    gronwall.add_argument('--averaging-time', type=float, default=1.0)
    gronwall.add_argument('--threshold', type=float, default=1e-6)
    gronwall.add_argument('--tolerance', type=float, default=1e-8)
    return parser


_COMMANDS = {'simulate': _simulate, 'twin': _twin, 'estimates': _estimates, 'certify': _certify,
             'gronwall': _gronwall}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Точка входа.

    Parameters
    ----------
    argv : Sequence[str], optional
        Аргументы, по умолчанию `sys.argv[1:]`.

    Returns
    -------
    return : int
        Код возврата.
    """
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    session = Session(out_dir=args.out, seed=args.seed, snapshot_format=args.snapshot_format)
    try:
        return _COMMANDS[args.command](args, session)
    except BlowUpError as exc:
        logger.error("%s", exc.message)
        return EXIT_BLOWUP
    except _CONFIG_ERRORS as exc:
        logger.error("%s", exc.message)
        return EXIT_CONFIG
