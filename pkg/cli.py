#!/usr/bin/env python3
"""
Command-line front end. Every subcommand runs the pipeline, buffers its
outputs and writes them together with a manifest only when it succeeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from artifacts import ArtifactWriter, RunManifest
from config import Config, get_config, setup_logging
from errors import InvalidGrid, PatternDuetError
from kinetics import ModelParams
from pde_sim import SimConfig, run_scenario, sweep
from pipeline import DEFAULT_WINDOW, BifurcationAnalysisEngine
from scenarios import PARAMETER_SETS, Scenario, get_scenario, ic_ensemble

logger = logging.getLogger(__name__)


def _engine(args) -> BifurcationAnalysisEngine:
    engine = BifurcationAnalysisEngine(get_config(args.profile))
    if args.model:
        engine.load_model(ModelParams.from_json(args.model))
    else:
        engine.load_model(args.set)
    point = getattr(args, 'point', None)
    if point:
        engine.load_model(engine.params.with_bifurcation(*point))
        if not args.model:
            engine.parameter_set = args.set
    return engine


def _manifest(args, command: str, engine: Optional[BifurcationAnalysisEngine] = None) -> RunManifest:
    manifest = RunManifest(command=command)
    if args.model:
        manifest.add_input(args.model)
    if engine is not None and engine.params is not None:
        manifest.parameters = engine.params.to_dict()
    manifest.parameters.update({'profile': args.profile, 'seed': args.seed})
    return manifest


def _writer(args, manifest: RunManifest) -> ArtifactWriter:
    return ArtifactWriter(args.out_dir, manifest, check=args.check)


def cmd_equilibrium(args) -> int:
    engine = _engine(args)
    writer = _writer(args, _manifest(args, 'equilibrium', engine))
    writer.add_json('equilibrium.json', engine.calculate_equilibrium())
    writer.commit()
    return 0


def cmd_dispersion(args) -> int:
    engine = _engine(args)
    writer = _writer(args, _manifest(args, 'dispersion', engine))
    writer.add_csv('dispersion.csv', engine.calculate_dispersion(args.k_max))
    writer.commit()
    return 0


def cmd_turing_curves(args) -> int:
    engine = _engine(args)
    writer = _writer(args, _manifest(args, 'turing-curves', engine))
    writer.add_csv('turing_curves.csv', engine.calculate_turing_curves(args.modes, args.samples))
    writer.commit()
    return 0


def cmd_tt_point(args) -> int:
    engine = _engine(args)
    writer = _writer(args, _manifest(args, 'tt-point', engine))
    writer.add_json('tt_point.json', engine.calculate_tt_point(args.k1, args.k2, strict=args.strict))
    writer.commit()
    return 0


def cmd_normal_form(args) -> int:
    engine = _engine(args)
    writer = _writer(args, _manifest(args, 'normal-form', engine))
    writer.add_json('nf.json', engine.calculate_normal_form(args.k1, args.k2))
    writer.commit()
    return 0


def _resolve_eps(engine: BifurcationAnalysisEngine, args):
    if args.eps:
        return tuple(args.eps)
    if args.at:
        return engine.epsilon_of(*args.at)
    if engine.parameter_set:
        return engine.epsilon_of(*PARAMETER_SETS[engine.parameter_set].default_point)
    return engine.epsilon_of(engine.params.d1, engine.params.s)


def cmd_nf_phase(args) -> int:
    engine = _engine(args)
    engine.calculate_normal_form(args.k1, args.k2)
    eps = _resolve_eps(engine, args)
    writer = _writer(args, _manifest(args, 'nf-phase', engine))

    phase = engine.calculate_phase(eps, T=args.T, dt=args.dt)
    writer.add_json('phase.json', dict(phase['phase'], anomalies=engine.detect_anomalies()))
    for name, frame in phase['trajectories'].items():
        writer.add_csv(f'trajectories/{name}', frame)
    writer.add_csv('profiles.csv', engine.predicted_profiles(eps))
    writer.add_json('lines.json', engine.calculate_lines(tuple(args.window)))
    for name, frame in engine.line_frames(tuple(args.window)).items():
        writer.add_csv(f'lines/{name}', frame)
    writer.commit()
    return 0


def cmd_regions(args) -> int:
    engine = _engine(args)
    engine.calculate_normal_form(args.k1, args.k2)
    writer = _writer(args, _manifest(args, 'regions', engine))
    region_map = engine.calculate_regions(tuple(args.window), args.n, args.jobs)
    writer.add_csv('regions.csv', region_map.to_frame())
    writer.add_json('regions.json', {
        'tt': engine.tt.as_dict(),
        'window': list(args.window),
        'fingerprints': region_map.fingerprint_ids,
        'distinct_fingerprints': len(region_map.distinct_fingerprints()),
        'labels': sorted({cell.region_label for cell in region_map.cells}),
        'lines': engine.calculate_lines(tuple(args.window)),
    })
    writer.commit()
    return 0


def _sim_config(args) -> SimConfig:
    overrides = {}
    for key, attr in (('N', 'N'), ('dt', 'dt'), ('T_max', 'T_max'), ('steady_tol', 'steady_tol'),
                      ('integrator', 'integrator')):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return SimConfig.from_profile(get_config(args.profile), **overrides)


def cmd_simulate(args) -> int:
    if args.scenario:
        scenario = get_scenario(args.scenario)
    else:
        engine = _engine(args)
        eq = engine.model.equilibrium()
        perturb = args.perturb or []
        scenario = Scenario('custom', engine.params, (eq.u_star, eq.v_star),
                            {int(k): cu for k, cu, _ in perturb}, {int(k): cv for k, _, cv in perturb})

    manifest = RunManifest(command='simulate', parameters=scenario.params.to_dict())
    if args.scenario and args.scenario.endswith('.json'):
        manifest.add_input(args.scenario)
    if args.model:
        manifest.add_input(args.model)
    writer = _writer(args, manifest)

    run = run_scenario(scenario, _sim_config(args), reflect=args.reflect)
    report = run.report()

    engine = BifurcationAnalysisEngine(get_config(args.profile))
    engine.load_model(scenario.params)
    if scenario.parameter_set:
        engine.parameter_set = scenario.parameter_set
    try:
        report['cross_validation'] = engine.cross_validate(run)
    except PatternDuetError as e:
        logger.warning('normal-form cross-validation skipped: %s', e)
        report['cross_validation'] = None

    writer.add_json('attractor.json', report)
    for name, frame in run.snapshot_frames().items():
        writer.add_csv(f'snapshots/{name}', frame)
    writer.commit()
    return 0


def cmd_sweep(args) -> int:
    engine = _engine(args)
    d1_values = np.linspace(*args.d1_range[:2], int(args.d1_range[2])) if args.d1_range else []
    s_values = np.linspace(*args.s_range[:2], int(args.s_range[2])) if args.s_range else []
    if len(d1_values) == 0 or len(s_values) == 0:
        raise InvalidGrid('sweep grid is empty')
    set_name = engine.parameter_set or args.set
    ensemble = ic_ensemble(set_name, args.n_random, args.seed)

    writer = _writer(args, _manifest(args, 'sweep', engine))
    empirical = sweep(engine.params, d1_values, s_values, ensemble, _sim_config(args), jobs=args.jobs)
    writer.add_csv('sweep.csv', empirical.to_frame())
    writer.add_json('sweep.json', {'ensemble': [{'u': {str(k): c for k, c in cu.items()},
                                                  'v': {str(k): c for k, c in cv.items()}}
                                                 for cu, cv in ensemble],
                                   'cells': [{'d1': c.d1, 's': c.s, 'labels': c.labels,
                                              'attractors': c.attractors} for c in empirical.cells]})
    writer.commit()
    return 0


def build_parser() -> argparse.ArgumentParser:
    # no prefix matching: sweep's --s would otherwise collide with --set/--seed
    parser = argparse.ArgumentParser(prog='pattern-duet', allow_abbrev=False,
                                     description='Turing-Turing bifurcation analysis of reaction-diffusion kinetics')
    parser.add_argument('--model', help='model JSON file (m, a, b, s, d1, d2[, l])')
    parser.add_argument('--set', default='1', choices=['1', '2'], help='built-in parameter set')
    parser.add_argument('--out-dir', default=Config.OUT_DIR)
    parser.add_argument('--seed', type=int, default=Config.SEED)
    parser.add_argument('--jobs', type=int, default=Config.JOBS)
    parser.add_argument('--check', action='store_true', help='recompute and diff against existing artifacts')
    parser.add_argument('--profile', default=os.environ.get('PATTERN_DUET_PROFILE') or 'default',
                        choices=['full', 'quick', 'default'])
    parser.add_argument('--log-level', default=None)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('equilibrium', help='interior equilibrium and linearization')
    p.set_defaults(handler=cmd_equilibrium)

    p = sub.add_parser('dispersion', help='Theta(k), Delta(k) table')
    p.add_argument('--k-max', type=int, default=10)
    p.add_argument('--point', type=float, nargs=2, metavar=('D1', 'S'))
    p.set_defaults(handler=cmd_dispersion)

    p = sub.add_parser('turing-curves', help='Turing curves s = s_k(d1)')
    p.add_argument('--modes', type=int, nargs='+', default=[1, 2, 3, 4])
    p.add_argument('--samples', type=int, default=100)
    p.set_defaults(handler=cmd_turing_curves)

    for name, handler, text in (('tt-point', cmd_tt_point, 'Turing-Turing point and spectrum report'),
                                ('normal-form', cmd_normal_form, 'normal form coefficients'),
                                ('nf-phase', cmd_nf_phase, 'equilibria, lines and trajectories'),
                                ('regions', cmd_regions, 'region map around the TT point')):
        p = sub.add_parser(name, help=text)
        p.add_argument('--k1', type=int)
        p.add_argument('--k2', type=int)
        p.set_defaults(handler=handler)
        if name == 'tt-point':
            p.add_argument('--strict', action='store_true', help='fail when side conditions fail')
        if name in ('nf-phase', 'regions'):
            p.add_argument('--window', type=float, nargs=2, default=list(DEFAULT_WINDOW),
                           metavar=('W_D1', 'W_S'))
        if name == 'nf-phase':
            group = p.add_mutually_exclusive_group()
            group.add_argument('--eps', type=float, nargs=2, metavar=('EPS1', 'EPS2'))
            group.add_argument('--at', type=float, nargs=2, metavar=('D1', 'S'))
            p.add_argument('--T', type=float, default=2000.0)
            p.add_argument('--dt', type=float, default=0.5)
        if name == 'regions':
            p.add_argument('--n', type=int, default=None)

    for name, handler in (('simulate', cmd_simulate), ('sweep', cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument('--N', type=int)
        p.add_argument('--dt', type=float)
        p.add_argument('--T-max', dest='T_max', type=float)
        p.add_argument('--steady-tol', dest='steady_tol', type=float)
        p.add_argument('--integrator', choices=['IMEX', 'explicit'])
        p.set_defaults(handler=handler)
    simulate = sub.choices['simulate']
    simulate.add_argument('--scenario', help='built-in scenario name or scenario JSON file')
    simulate.add_argument('--perturb', type=float, nargs=3, action='append', metavar=('K', 'CU', 'CV'),
                          help='add CU cos(kx), CV cos(kx) to E*; repeatable')
    simulate.add_argument('--reflect', action='store_true', help='start from the reflected initial data')
    simulate.add_argument('--point', type=float, nargs=2, metavar=('D1', 'S'))
    sweep_parser = sub.choices['sweep']
    sweep_parser.add_argument('--d1', dest='d1_range', type=float, nargs=3, metavar=('LO', 'HI', 'N'))
    sweep_parser.add_argument('--s', dest='s_range', type=float, nargs=3, metavar=('LO', 'HI', 'N'))
    sweep_parser.add_argument('--n-random', type=int, default=6)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except PatternDuetError as e:
        logger.error('%s failed: %s', args.command, e)
        sys.stderr.write(json.dumps(e.to_dict(), sort_keys=True, default=str) + '\n')
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
