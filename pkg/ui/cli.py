"""Command-line front end: JSON or CSV tables on stdout (or --out), logs on stderr."""
import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field

from services import levy, ratios, sausage, zeros
from services.errors import DomainError, MacdonaldKitError
from services.oracle.monte_carlo import mc_sausage
from services.oracle.talbot import talbot
from services.settings_manager import SettingsManager, log_level
from ui.validation import SUITES, run_suite

logger = logging.getLogger('MacdonaldKit.CLI')

SCHEMA_VERSION = '1'
COMMANDS = ('zeros', 'ratio', 'levy', 'sausage', 'expand', 'validate')
OUTPUTS = ('json', 'csv')
SAUSAGE_METHODS = ('exact', 'asymptotic', 'talbot', 'mc')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

CSV_COLUMNS = {
    'zeros': ('nu', 'index', 're', 'im', 'residual'),
    'ratio': ('nu', 'w_re', 'w_im', 'part', 're', 'im'),
    'levy': ('nu', 'a', 'b', 'x', 'density', 'case', 'truncation_bound'),
    'sausage': ('dim', 'radius', 't', 'method', 'value', 'stderr'),
    'expand': ('dim', 'radius', 'kind', 'power', 'coefficient', 't', 'value'),
    'validate': ('suite', 'check', 'passed', 'detail'),
}


def csv_header(command):
    return ','.join(CSV_COLUMNS[command])


@dataclass(frozen=True)
class RunSpec:
    command: str
    params: dict = field(default_factory=dict)
    output: str = 'json'
    out_path: str = None
    seed: int = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"Unknown command {self.command!r}, expected one of {COMMANDS}")
        if self.output not in OUTPUTS:
            raise DomainError(f"Unknown output {self.output!r}, expected one of {OUTPUTS}")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass
class Table:
    """What a command produced: the JSON record and its CSV rows."""
    record: dict
    rows: list
    ok: bool = True


def _methods(raw):
    methods = [m.strip() for m in raw.split(',') if m.strip()]
    unknown = [m for m in methods if m not in SAUSAGE_METHODS]
    if not methods or unknown:
        raise argparse.ArgumentTypeError(f"methods must come from {SAUSAGE_METHODS}, got {raw!r}")
    return methods


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--output', choices=OUTPUTS, default='json')
    common.add_argument('--out', dest='out_path', default=None, help='write to this file (UTF-8) instead of stdout')
    common.add_argument('--seed', type=int, default=None, help='random seed; used by Monte Carlo methods only')

    parser = argparse.ArgumentParser(prog='macdonald-kit', description='Macdonald function toolkit')
    sub = parser.add_subparsers(dest='command', required=True)

    def command(name, help_text):
        return sub.add_parser(
            name, parents=[common], help=help_text,
            epilog=f"CSV columns: {csv_header(name)}",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    p = command('zeros', 'complex zeros of K_nu')
    p.add_argument('--nu', type=float, required=True)

    p = command('ratio', 'decomposition of K_{nu+1}(w) / K_nu(w)')
    p.add_argument('--nu', type=float, required=True)
    p.add_argument('--w-re', type=float, required=True)
    p.add_argument('--w-im', type=float, default=0.0)

    p = command('levy', 'Levy density of the Bessel hitting time')
    p.add_argument('--nu', type=float, required=True)
    p.add_argument('--a', type=float, required=True)
    p.add_argument('--b', type=float, required=True)
    p.add_argument('--x', type=float, nargs='+', required=True)

    p = command('sausage', 'expected Wiener sausage volume')
    p.add_argument('--dim', type=int, required=True)
    p.add_argument('--radius', type=float, default=1.0)
    p.add_argument('--t', type=float, nargs='+', required=True)
    p.add_argument('--method', type=_methods, default=['exact'], help=f"comma-separated, from {','.join(SAUSAGE_METHODS)}")
    p.add_argument('--paths', type=int, default=None, help='Monte Carlo path budget')

    p = command('expand', 'large-t expansion of the sausage volume')
    p.add_argument('--dim', type=int, required=True)
    p.add_argument('--radius', type=float, default=1.0)
    p.add_argument('--n-terms', type=int, default=None)
    p.add_argument('--t', type=float, nargs='*', default=[])

    p = command('validate', 'run the invariant suites')
    p.add_argument('--suite', choices=('all',) + tuple(SUITES), default='all')
    return parser


def spec_from_args(args):
    values = vars(args).copy()
    command = values.pop('command')
    output = values.pop('output')
    out_path = values.pop('out_path')
    seed = values.pop('seed')
    return RunSpec(command=command, params=values, output=output, out_path=out_path, seed=seed)


def zero_set_record(zero_set):
    return {
        'schema': SCHEMA_VERSION,
        'nu': zero_set.nu,
        'count': zero_set.count,
        'zeros': [{'re': z.real, 'im': z.imag, 'residual': res} for z, res in zip(zero_set.zeros, zero_set.residuals)],
        'route_agreement': zero_set.route_agreement,
    }


def zero_set_from_record(record):
    """Inverse of zero_set_record."""
    return zeros.ZeroSet(
        nu=record['nu'],
        count=record['count'],
        zeros=tuple(complex(z['re'], z['im']) for z in record['zeros']),
        residuals=tuple(z['residual'] for z in record['zeros']),
        route_agreement=record['route_agreement'],
    )


class CommandRunner:
    def __init__(self, settings_manager=None):
        self.settings_manager = settings_manager or SettingsManager()

    def execute(self, spec):
        handler = getattr(self, f'_run_{spec.command}')
        return handler(spec)

    def _run_zeros(self, spec):
        nu = spec.params['nu']
        config = self.settings_manager.get_zeros_config()
        zero_set = zeros.find_zeros(
            nu, self.settings_manager.quad_spec(),
            route_tolerance=config['route_tolerance'], route_failure=config['route_failure'],
            max_iter=config['newton_max_iter'], residual_target=config['residual_target'],
        )
        rows = [[zero_set.nu, i, z.real, z.imag, res] for i, (z, res) in enumerate(zip(zero_set.zeros, zero_set.residuals))]
        return Table(record=zero_set_record(zero_set), rows=rows)

    def _run_ratio(self, spec):
        nu = spec.params['nu']
        w = complex(spec.params['w_re'], spec.params['w_im'])
        parts = ratios.ratio_decomposed(nu, w, self.settings_manager.quad_spec())
        values = {
            'constant': complex(parts.constant_part),
            'pole_at_zero': complex(parts.pole_at_zero),
            'pole_sum': complex(parts.pole_sum),
            'integral': complex(parts.integral_part),
            'total': complex(parts.total),
            'direct': complex(ratios.ratio_direct(nu, w)),
        }
        record = {
            'schema': SCHEMA_VERSION, 'nu': nu, 'w_re': w.real, 'w_im': w.imag, 'case': parts.case,
            'parts': {name: {'re': v.real, 'im': v.imag} for name, v in values.items()},
        }
        rows = [[nu, w.real, w.imag, name, v.real, v.imag] for name, v in values.items()]
        return Table(record=record, rows=rows)

    def _run_levy(self, spec):
        p = spec.params
        hitting = levy.HittingSpec(nu=p['nu'], a=p['a'], b=p['b'])
        for x in p['x']:
            if not x > 0:
                raise DomainError(f"x must be > 0, got {x}")
        evals = [levy.levy_eval(hitting, x) for x in p['x']]
        record = {
            'schema': SCHEMA_VERSION, 'nu': hitting.nu, 'a': hitting.a, 'b': hitting.b,
            'case': levy.case_label(hitting),
            'hitting_probability': levy.hitting_probability(hitting),
            'densities': [{'x': e.x, 'density': e.density, 'truncation_bound': e.truncation_bound} for e in evals],
        }
        rows = [[hitting.nu, hitting.a, hitting.b, e.x, e.density, e.case, e.truncation_bound] for e in evals]
        return Table(record=record, rows=rows)

    def _sausage_value(self, params, t, method, spec):
        if method == 'exact':
            return sausage.volume(params, t), None
        if method == 'asymptotic':
            return float(sausage.expansion(params).evaluate(t)), None
        if method == 'talbot':
            cfg = self.settings_manager.talbot_config()
            return talbot(lambda lam: sausage.laplace_L(params, lam), t, cfg), None
        overrides = {}
        if spec.seed is not None:
            overrides['seed'] = spec.seed
        if spec.params.get('paths') is not None:
            overrides['paths'] = spec.params['paths']
        result = mc_sausage(params, t, self.settings_manager.mc_config(**overrides))
        return result.estimate, result.stderr

    def _run_sausage(self, spec):
        p = spec.params
        params = sausage.SausageParams(d=p['dim'], r=p['radius'])
        for t in p['t']:
            if not t > 0:
                raise DomainError(f"t must be > 0, got {t}")
        rows = []
        for t in p['t']:
            for method in p['method']:
                value, stderr = self._sausage_value(params, t, method, spec)
                rows.append([params.d, params.r, t, method, value, stderr])
        record = {
            'schema': SCHEMA_VERSION, 'dim': params.d, 'radius': params.r,
            'rows': [dict(zip(('t', 'method', 'value', 'stderr'), row[2:])) for row in rows],
        }
        return Table(record=record, rows=rows)

    def _run_expand(self, spec):
        p = spec.params
        params = sausage.SausageParams(d=p['dim'], r=p['radius'])
        result = sausage.expansion(params, n_terms=p['n_terms'], spec=self.settings_manager.quad_spec())
        rows = [[params.d, params.r, 'term', power, coeff, None, None] for power, coeff in result.terms]
        if result.log_term is not None:
            rows.append([params.d, params.r, 'log_term', result.log_term[0], result.log_term[1], None, None])
        rows.append([params.d, params.r, 'remainder', result.remainder_order, None, None, None])
        evaluations = [(t, float(result.evaluate(t))) for t in p['t']]
        rows.extend([params.d, params.r, 'evaluation', None, None, t, value] for t, value in evaluations)
        record = {
            'schema': SCHEMA_VERSION, 'dim': params.d, 'radius': params.r,
            'terms': [{'power': power, 'coefficient': coeff} for power, coeff in result.terms],
            'log_term': None if result.log_term is None
            else {'power': result.log_term[0], 'coefficient': result.log_term[1]},
            'remainder_order': result.remainder_order,
            'evaluations': [{'t': t, 'value': value} for t, value in evaluations],
        }
        return Table(record=record, rows=rows)

    def _run_validate(self, spec):
        results = run_suite(spec.params['suite'])
        ok = all(r.passed for r in results)
        record = {
            'schema': SCHEMA_VERSION, 'suite': spec.params['suite'], 'passed': ok,
            'checks': [{'suite': r.suite, 'check': r.check, 'passed': r.passed, 'detail': r.detail} for r in results],
        }
        rows = [[r.suite, r.check, r.passed, r.detail] for r in results]
        return Table(record=record, rows=rows, ok=ok)


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return format(value, '.17g')
    return str(value)


def render(spec, table):
    if spec.output == 'json':
        return json.dumps(table.record, indent=2, ensure_ascii=False) + '\n'
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_COLUMNS[spec.command])
    writer.writerows([_cell(v) for v in row] for row in table.rows)
    return buffer.getvalue()


def emit(spec, text, stdout=None):
    if spec.out_path:
        with open(spec.out_path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {spec.command} output to {spec.out_path}")
    else:
        (stdout or sys.stdout).write(text)


def run(argv=None, settings_manager=None, stdout=None):
    """Parse argv, run one command and return the exit status."""
    logging.basicConfig(level=log_level(), format=LOG_FORMAT, stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        spec = spec_from_args(args)
        table = CommandRunner(settings_manager).execute(spec)
        emit(spec, render(spec, table), stdout)
    except DomainError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2
    except MacdonaldKitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    if not table.ok:
        logger.error(f"{args.command}: validation failed")
        return 1
    return 0
