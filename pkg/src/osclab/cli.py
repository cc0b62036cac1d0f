"""Command-line interface.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
and input errors.  Every command prints one JSON document that echoes the
seed.
"""

import argparse
import json
import math
import sys

from . import constants as K
from .errors import InputParseError, OscLabError
from .functionals import (CubeFunctional, ainfty_char_profile,
                          embedding_constant, fujii_wilson, sd_check)
from .grid import CellFunction, CellMeasure, DyadicCube, Grid
from .io import load_cells
from .norms import (ExponentFunction, LocalNormSpec, local_norm,
                    modular_at_norm)
from .oscillation import bmo_norm, cz_decompose, sparse_dominate
from .testfuncs import builtin, power_weight
from .verify import (SUITES, VerifyConfig, build_report, run_suites,
                     write_plots, write_report)
from .young import from_name

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# input helpers

class Inputs:
    """Resolves the grid, measure and functions named on the command line.

    The grid comes from the first file argument; with only built-ins it is
    ``--dim`` by ``--depth``.
    """

    def __init__(self, args):
        self.args = args
        self.grid = None
        for name in ('measure', 'f', 'g', 'weight', 'exponent'):
            src = getattr(args, name, None)
            if src and not src.startswith('builtin:') and src != 'lebesgue' \
                    and not _is_number(src):
                self.grid, _ = load_cells(src, args.dim)
                break
        if self.grid is None:
            self.grid = Grid(args.dim, args.depth)

    def cells(self, src, what):
        if src is None:
            raise UsageError(f"missing --{what}")
        if src.startswith('builtin:'):
            name = src[len('builtin:'):]
            if name.startswith('power-weight'):
                _, _, d = name.partition(':')
                return power_weight(self.grid, float(d or 0.0))
            return builtin(self.grid, name)
        grid, vals = load_cells(src, self.args.dim)
        if grid != self.grid:
            raise UsageError(f"{src}: grid {grid.dimension}x{grid.depth} "
                             f"differs from {self.grid.dimension}x"
                             f"{self.grid.depth}")
        return CellFunction(grid, vals)

    def measure(self):
        src = getattr(self.args, 'measure', None) or 'lebesgue'
        base = (CellMeasure.lebesgue(self.grid) if src == 'lebesgue' else
                CellMeasure(self.grid, self.cells(src, 'measure').values))
        return base

    def cube(self):
        text = getattr(self.args, 'cube', None)
        if not text:
            return self.grid.root
        cube = DyadicCube.parse(text)
        self.grid.check(cube)
        return cube

    def functional(self, measure, weight=None):
        kind = getattr(self.args, 'Y', None) or 'measure'
        if kind == 'measure':
            return CubeFunctional.of_measure(measure)
        if weight is None:
            raise UsageError(f"--Y {kind} needs --weight")
        if kind == 'weight':
            return CubeFunctional.weight_mass(weight, measure, strict=False)
        if kind.startswith('wr:'):
            return CubeFunctional.wr(weight, measure, float(kind[3:]))
        raise UsageError(f"unknown --Y {kind!r}")


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def _emit(doc):
    print(json.dumps(doc, sort_keys=True, indent=2))


# ---------------------------------------------------------------------------
# commands

def cmd_norm(args):
    inp = Inputs(args)
    base = inp.measure()
    weight = inp.cells(args.weight, 'weight') if args.weight else None
    nu = base.weighted(weight) if weight is not None else base
    f = inp.cells(args.f, 'f')
    cube = inp.cube()
    fam = args.family
    y = None if (args.Y or 'measure') == 'measure' else \
        inp.functional(base, weight)
    if fam in ('lp', 'weak-lp'):
        spec = LocalNormSpec(fam, nu, p=float(args.params), functional=y)
    elif fam in ('orlicz', 'weak-orlicz'):
        spec = LocalNormSpec(fam, nu, phi=from_name(args.params),
                             functional=y)
    else:
        src = args.params
        if _is_number(src):
            pfun = ExponentFunction.constant(inp.grid, float(src))
        else:
            pfun = ExponentFunction(inp.grid, inp.cells(src, 'params').values)
        spec = LocalNormSpec.variable(nu, pfun, functional=y)
    value = local_norm(f, cube, spec)
    mod = None
    if fam in ('lp', 'orlicz', 'variable') and value > 0:
        mod = modular_at_norm(f, cube, spec, value)
    _emit({'command': 'norm', 'family': fam, 'params': args.params,
           'cube': str(cube), 'value': value, 'modular_at_value': mod,
           'seed': args.seed})
    return EXIT_OK


def cmd_bmo(args):
    inp = Inputs(args)
    mu = inp.measure()
    f = inp.cells(args.f, 'f')
    value, cube = bmo_norm(f, mu, args.min_level)
    _emit({'command': 'bmo', 'value': value, 'argmax_cube': str(cube),
           'min_level': args.min_level, 'label': 'dyadic BMO',
           'seed': args.seed})
    return EXIT_OK


def cmd_czd(args):
    inp = Inputs(args)
    mu = inp.measure()
    g = inp.cells(args.g, 'g')
    cube = inp.cube()
    res = cz_decompose(g, cube, mu, args.L)
    sel = [{'level': q.level, 'index': list(q.index), 'average': a}
           for q, a in zip(res.selected, res.averages)]
    _emit({'command': 'czd', 'cube': str(cube), 'L': args.L,
           'root_average': res.root_average, 'selected': sel,
           'smallness_ratio': res.smallness_ratio(mu),
           'doubling_factor': res.doubling_factor, 'seed': args.seed})
    return EXIT_OK


def cmd_sparse(args):
    inp = Inputs(args)
    mu = inp.measure()
    f = inp.cells(args.f, 'f')
    fam = sparse_dominate(f, inp.cube(), mu, args.Lambda)
    members = [{'cube': str(q), 'mass': mu.mass(q), 'major_mass': em,
                'oscillation': o}
               for q, em, o in zip(fam.members, fam.major_masses,
                                   fam.oscillations)]
    sp = fam.sparseness(mu)
    ok = sp <= args.Lambda / (args.Lambda - 1.0) * (1 + 1e-12)
    _emit({'command': 'sparse', 'Lambda': args.Lambda, 'members': members,
           'sparseness': sp, 'C_dom': fam.domination_constant,
           'truncated': fam.truncated, 'pass': bool(ok), 'seed': args.seed})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ainfty(args):
    inp = Inputs(args)
    mu = inp.measure()
    weight = inp.cells(args.weight, 'weight') if args.weight else \
        CellFunction.constant(inp.grid, 1.0)
    y = inp.functional(mu, weight)
    doc = {'command': 'ainfty', 'check': args.check, 'Y': args.Y or
           'measure', 'seed': args.seed, 'trials': args.trials}
    ok = True
    if args.check == 'fujii-wilson':
        value, cube = fujii_wilson(weight, y, mu, args.min_level)
        doc.update(value=value, argmax_cube=str(cube),
                   label='dyadic-local maximal operator')
        ok = math.isfinite(value)
    elif args.check == 'sd':
        holds, est = sd_check(y, weight, mu, args.p, args.s, args.trials,
                              args.seed, bound=args.bound,
                              min_level=args.min_level)
        doc.update(holds=holds, estimate=est, p=args.p, s=args.s,
                   bound=args.bound)
        ok = holds
    elif args.check == 'profile':
        nu = mu.weighted(weight) if args.weight else mu
        spec = _profile_spec(args, nu, inp.grid)
        prof = ainfty_char_profile(y, spec, mu, args.trials, args.seed,
                                   args.min_level)
        doc.update(samples=[{'fraction': fr, 'norm': v,
                             'bound': prof.bound(fr)}
                            for fr, v in prof.samples],
                   fitted_C_Y=prof.fitted_C, inverse=prof.inverse_name,
                   label=prof.label)
        if args.bound is not None:
            ok = prof.fitted_C <= args.bound
    else:
        tests = [builtin(inp.grid, n) for n in
                 ('log-reciprocal', 'indicator:0.5',
                  f'random-step:{args.seed}')]
        value = embedding_constant(weight, y, mu, tests, args.min_level)
        doc.update(value=value)
        ok = math.isfinite(value)
    doc['pass'] = bool(ok)
    _emit(doc)
    return EXIT_OK if ok else EXIT_FAIL


def _profile_spec(args, nu, grid):
    fam = args.family
    if fam in ('lp', 'weak-lp'):
        return LocalNormSpec(fam, nu, p=float(args.params or 2))
    if fam in ('orlicz', 'weak-orlicz'):
        return LocalNormSpec(fam, nu, phi=from_name(args.params or 'power:2'))
    return LocalNormSpec.variable(
        nu, ExponentFunction.constant(grid, float(args.params or 2)))


def _kv(text):
    out = {}
    for part in (text or '').split(','):
        if not part.strip():
            continue
        if '=' not in part:
            raise UsageError(f"bad parameter {part!r}; use key=value")
        k, v = part.split('=', 1)
        out[k.strip()] = v.strip()
    return out


def cmd_constants(args):
    kv = _kv(args.params)

    def num(key, default):
        try:
            return float(kv.pop(key, default))
        except ValueError:
            raise UsageError(f"parameter {key} must be a number") from None

    doc = {'command': 'constants', 'which': args.which, 'seed': args.seed}
    if args.which == 'theorem':
        psi_name = kv.pop('psi', 'identity')
        if psi_name == 'identity':
            psi = K.Bijection.identity()
        elif psi_name.startswith('power:'):
            psi = K.Bijection.power(float(psi_name[6:]))
        else:
            psi = K.Bijection.orlicz(from_name(psi_name))
        c_y, kk = num('C_Y', 1), num('K', 1)
        c_mu, n_mu = num('c_mu', 1), num('n_mu', 1)
        value, arg = K.theorem_constant(psi, c_y, kk, c_mu, n_mu)
        doc.update(formula_inputs={'psi': psi.name, 'C_Y': c_y, 'K': kk,
                                   'c_mu': c_mu, 'n_mu': n_mu},
                   value=value, argmin_L=arg)
    elif args.which == 'laplace':
        phi = from_name(kv.pop('phi', 'power:2'))
        jn = K.JNParams(num('c1', 2), num('c2', 2))
        doc.update(formula_inputs={'phi': phi.name, 'c1': jn.c1,
                                   'c2': jn.c2},
                   value=K.laplace_bound(phi, jn))
    elif args.which == 'orlicz':
        phi = from_name(kv.pop('phi', 'plog:2:1'))
        c, c_mu, n_mu = num('c', 1), num('c_mu', 1), num('n_mu', 1)
        doc.update(formula_inputs={'phi': phi.name, 'c': c, 'c_mu': c_mu,
                                   'n_mu': n_mu},
                   value=K.orlicz_constant(phi, c, c_mu, n_mu))
        if phi.name.startswith('plog-alt'):
            _, p, a = phi.name.split(':')
            doc['alternative_bound'] = K.alt_young_constant(
                float(p), float(a), c_mu, n_mu)
    else:
        pp, n = num('p_plus', 2), num('n', 1)
        c_n = num('C_n', K.variable_c_n(pp, n))
        doc.update(formula_inputs={'p_plus': pp, 'n': n, 'C_n': c_n},
                   value=K.variable_jn_constant(c_n, pp))
    if kv:
        raise UsageError(f"unknown parameter(s): {', '.join(sorted(kv))}")
    _emit(doc)
    return EXIT_OK


def cmd_verify(args):
    names = sorted(SUITES) if args.suite == 'all' else args.suite.split(',')
    cfg = VerifyConfig(depth=args.depth, seed=args.seed, quick=args.quick,
                       threads=args.threads)
    try:
        records, plots = run_suites(names, cfg)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    report = build_report(records, cfg, names)
    if args.report:
        write_report(args.report, report)
    if args.plots:
        write_plots(args.plots, plots)
    failed = [r for r in records if not r['pass']]
    _emit({'command': 'verify', 'seed': args.seed, 'suites': sorted(names),
           'passed': report['passed'], 'failed': failed,
           'report': args.report})
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--dim', type=int, default=1,
                        help='grid dimension for CSV inputs and built-ins')
    common.add_argument('--depth', type=int, default=10,
                        help='grid depth when only built-ins are used')
    common.add_argument('--config', help='key = value file mirroring flags')
    common.add_argument('--format', choices=('json',), default='json')

    meas = argparse.ArgumentParser(add_help=False)
    meas.add_argument('--measure', default='lebesgue',
                      help="cell masses file or 'lebesgue'")
    meas.add_argument('--min-level', type=int, default=1)

    p = argparse.ArgumentParser(prog='osclab', description=__doc__)
    sub = p.add_subparsers(dest='command', required=True)

    s = sub.add_parser('norm', parents=[common, meas])
    s.add_argument('--family', required=True,
                   choices=('lp', 'weak-lp', 'orlicz', 'weak-orlicz',
                            'variable'))
    s.add_argument('--params', required=True,
                   help='p, a Young function name, or an exponent file')
    s.add_argument('--cube')
    s.add_argument('--f', required=True)
    s.add_argument('--weight')
    s.add_argument('--Y', default='measure')
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser('bmo', parents=[common, meas])
    s.add_argument('--f', required=True)
    s.set_defaults(func=cmd_bmo)

    s = sub.add_parser('czd', parents=[common, meas])
    s.add_argument('--g', required=True)
    s.add_argument('--cube')
    s.add_argument('--L', type=float, required=True)
    s.set_defaults(func=cmd_czd)

    s = sub.add_parser('sparse', parents=[common, meas])
    s.add_argument('--f', required=True)
    s.add_argument('--cube')
    s.add_argument('--Lambda', type=float, default=2.0)
    s.set_defaults(func=cmd_sparse)

    s = sub.add_parser('ainfty', parents=[common, meas])
    s.add_argument('--check', required=True,
                   choices=('fujii-wilson', 'sd', 'profile', 'embed'))
    s.add_argument('--weight')
    s.add_argument('--Y', default='measure')
    s.add_argument('--p', type=float, default=1.0)
    s.add_argument('--s', type=float, default=2.0)
    s.add_argument('--bound', type=float)
    s.add_argument('--family', default='orlicz',
                   choices=('lp', 'weak-lp', 'orlicz', 'weak-orlicz',
                            'variable'))
    s.add_argument('--params')
    s.add_argument('--trials', type=int, default=50)
    s.set_defaults(func=cmd_ainfty)

    s = sub.add_parser('constants', parents=[common])
    s.add_argument('--which', required=True,
                   choices=('theorem', 'laplace', 'orlicz', 'variable-jn'))
    s.add_argument('--params', default='',
                   help='comma separated key=value pairs')
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser('verify', parents=[common])
    s.set_defaults(depth=14)
    s.add_argument('--suite', default='all',
                   help=f"all or a comma list of: {', '.join(SUITES)}")
    s.add_argument('--quick', action='store_true')
    s.add_argument('--report', help='JSON report path')
    s.add_argument('--plots', help='directory for plot CSV files')
    s.add_argument('--threads', type=int)
    s.set_defaults(func=cmd_verify)
    return p


def read_config(path):
    """``key = value`` lines to flags; ``true``/``false`` toggle switches."""
    out = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputParseError(f"cannot read: {exc.strerror}", path) from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise InputParseError("expected key = value", path, lineno)
        key, val = (x.strip() for x in line.split('=', 1))
        flag = '--' + key.replace('_', '-') if key not in (
            'L', 'Y', 'Lambda') else '--' + key
        if val.lower() == 'true':
            out.append(flag)
        elif val.lower() != 'false':
            out += [flag, val]
    return out


def _expand_config(argv):
    """Insert flags from ``--config`` files right after the command, so
    explicit flags win."""
    argv = list(argv)
    if '--config' in argv:
        i = argv.index('--config')
        if i + 1 >= len(argv):
            raise UsageError('--config needs a path')
        extra = read_config(argv[i + 1])
        del argv[i:i + 2]
        pos = next((j for j, a in enumerate(argv) if not a.startswith('-')),
                   len(argv))
        argv[pos + 1:pos + 1] = extra
    return argv


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        argv = _expand_config(argv)
    except (UsageError, InputParseError) as exc:
        print(f"osclab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, InputParseError, OSError) as exc:
        print(f"osclab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OscLabError as exc:
        print(f"osclab: error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
