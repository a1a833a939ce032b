# Standard library imports
import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import platform
import sys

# Third-party imports
import numpy as np

# Local application/library specific imports
import asymptotics
import bernstein
import bgamma
import density
import determinacy
import selftest
from errors import BergUrbanikError, DomainError, InapplicableError, ParameterError

APP_NAME = "BergUrbanik"


def get_user_data_dir(app_name=APP_NAME):
    """
    Returns the appropriate directory for storing user data based on the OS and whether the app is frozen.
    """
    if hasattr(sys, 'frozen'):
        if platform.system() == 'Windows':
            return os.path.join(os.path.expanduser('~'), 'AppData', 'Local', app_name, 'user_data')
        elif platform.system() == 'Darwin':
            return os.path.join(os.path.expanduser('~/Library/Application Support/'), app_name, 'user_data')
        else:
            return os.path.join(os.path.expanduser('~/.config/'), app_name, 'user_data')
    else:
        # Use a local directory when running in development
        return os.path.join(os.path.dirname(os.path.realpath(__file__)), 'user_data')


# If no config file is given or it cannot be read
DEFAULT_CONFIG = {
    "family": {"family": "identity"},
    "run": {
        "t": 1.0,
        "n": 0,
        "x_min": 0.5,
        "x_max": 5.0,
        "count": 10,
        "spacing": "linear",
        "tol": 1e-8,
        "nmax": 10,
        "output": "",
        "format": "",
        "workers": 1,
    },
}

FLOAT_KEYS = ("t", "x_min", "x_max", "tol")
INT_KEYS = ("n", "count", "nmax", "workers")


class ConfigManager:
    def __init__(self, config_file=None, default_config=DEFAULT_CONFIG):
        self.config_file = config_file
        self.default_config = default_config
        self.config = self.read_config()

    def _defaults(self):
        return {section: dict(values) for section, values in self.default_config.items()}

    def read_config(self):
        """Defaults overlaid with the [family] and [run] sections of an explicitly named file."""
        if not self.config_file:
            return self._defaults()
        if not os.path.exists(self.config_file):
            raise ParameterError(f"configuration file {self.config_file} not found", op="config")
        try:
            parser = configparser.ConfigParser()
            with open(self.config_file, "r") as file:
                parser.read_file(file)
            data = self._defaults()
            if parser.has_section("family"):
                data["family"] = dict(parser["family"])
            if parser.has_section("run"):
                data["run"].update(parser["run"])
            self.convert_types(data)
        except (configparser.Error, ValueError) as e:
            raise ParameterError(f"error loading configuration {self.config_file}: {e}", op="config") from e
        return data

    def convert_types(self, data):
        run = data["run"]
        for key in FLOAT_KEYS:
            if key in run:
                run[key] = float(run[key])
        for key in INT_KEYS:
            if key in run:
                run[key] = int(run[key])
        for key in ("spacing", "format"):
            run[key] = str(run.get(key, "")).strip().lower()

    def save_config(self, config, path):
        parser = configparser.ConfigParser()
        for section, values in config.items():
            parser[section] = {key: _render(value) for key, value in values.items()}
        try:
            with open(path, "w") as file:
                parser.write(file)
        except OSError as e:
            logging.warning(f"Error saving configuration: {e}")

    def get_config(self):
        return self.config


###################################### Output


def _render(value):
    """Fixed 17-significant-digit rendering, locale independent."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _csv_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header:
        writer.writerow(header)
    for row in rows:
        writer.writerow([_render(v) for v in row])
    return buffer.getvalue()


def _json_text(payload):
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _table_payload(header, rows):
    return [dict(zip(header, (_jsonable(v) for v in row))) for row in rows]


def _jsonable(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
    return value


def _emit(text, output):
    if output:
        with open(output, "w", newline="") as file:
            file.write(text)
        logging.info(f"[CLI] wrote {output}")
    else:
        sys.stdout.write(text)


def _write_table(header, rows, run_cfg, default_format="csv"):
    fmt = run_cfg["format"] or default_format
    if fmt == "json":
        text = _json_text(_table_payload(header, rows))
    elif fmt == "csv":
        text = _csv_text(header, rows)
    else:
        raise ParameterError(f"unknown output format '{fmt}'", op="run")
    _emit(text, run_cfg["output"])


def _write_json(payload, run_cfg):
    if run_cfg["format"] not in ("", "json"):
        raise ParameterError("this subcommand writes JSON only", op="run")
    _emit(_json_text(payload), run_cfg["output"])


###################################### Helpers


def _float_list(text):
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"'{text}' is not a comma-separated list of numbers", op="run") from None


def _grid(args, run_cfg):
    if getattr(args, "x", None):
        return _float_list(args.x)
    lo, hi, count = run_cfg["x_min"], run_cfg["x_max"], run_cfg["count"]
    if count < 1:
        raise ParameterError(f"grid count must be >= 1, got {count}", op="run")
    if run_cfg["spacing"] == "log":
        return list(np.geomspace(lo, hi, count))
    if run_cfg["spacing"] not in ("", "linear"):
        raise ParameterError(f"unknown spacing '{run_cfg['spacing']}'", op="run")
    return list(np.linspace(lo, hi, count))


def _family_label(phi):
    return " ".join([phi.family] + [f"{k}={v}" for k, v in phi.describe().items() if k != "family"])


def _evaluator(phi, run_cfg):
    return bgamma.BernsteinGammaEvaluator(phi, tol=min(1e-10, run_cfg["tol"]))


###################################### Subcommands


def cmd_phi(phi, args, run_cfg):
    rows = []
    for u in _grid(args, run_cfg):
        try:
            inverse = float(phi.inverse(u))
        except BergUrbanikError:
            inverse = math.nan
        slope = float(phi.derivative(u)) if u > 0 else math.nan
        rows.append((u, float(phi.eval(u)), slope, inverse))
    _write_table(["u", "phi", "phi_prime", "inverse"], rows, run_cfg)


def cmd_wgamma(phi, args, run_cfg):
    evaluator = _evaluator(phi, run_cfg)
    try:
        C_phi = bgamma.calibrate_C_phi(phi)[0]
    except BergUrbanikError:
        C_phi = math.nan
    rows = []
    t = run_cfg["t"]
    for z in _grid(args, run_cfg):
        rows.append((z, bgamma.eval_W(evaluator, z).real, bgamma.eval_W_power(evaluator, t, z).real,
                     evaluator.gamma_phi, C_phi))
    _write_table(["z", "W", "W_t", "gamma_phi", "C_phi"], rows, run_cfg)


def cmd_moments(phi, args, run_cfg):
    sequence = bgamma.moments(phi, run_cfg["t"], run_cfg["nmax"])
    if (run_cfg["format"] or "csv") == "csv":
        _emit(_csv_text(None, [sequence.values]), run_cfg["output"])
    else:
        _write_json({"family": phi.describe(), "t": sequence.t, "moments": [_jsonable(v) for v in sequence.values]},
                    run_cfg)


def cmd_density(phi, args, run_cfg):
    evaluator = _evaluator(phi, run_cfg)
    grid = density.density_grid(evaluator, run_cfg["t"], run_cfg["n"], _grid(args, run_cfg), run_cfg["tol"],
                                workers=run_cfg["workers"])
    if grid.errors:
        # re-run the first failure so its own error class sets the exit code
        x, message = grid.errors[0]
        logging.error(f"[CLI] {len(grid.errors)} grid point(s) failed, first at x={x}: {message}")
        density.mellin_barnes_density(evaluator, run_cfg["t"], x, run_cfg["n"], run_cfg["tol"])
    t, n = run_cfg["t"], run_cfg["n"]
    rows = [(p.x, t, n, p.value, p.abs_error, p.contour_c, p.contour_B) for p in grid.points]
    _write_table(["x", "t", "n", "value", "abs_error", "contour_c", "contour_B"], rows, run_cfg)


def cmd_asym(phi, args, run_cfg):
    t, n = run_cfg["t"], run_cfg["n"]
    xs = _grid(args, run_cfg)
    grid = density.density_grid(_evaluator(phi, run_cfg), t, n, xs, run_cfg["tol"], workers=run_cfg["workers"])
    exact = {p.x: p.value for p in grid.points}
    label = _family_label(phi)
    rows = []
    for x in xs:
        try:
            asym = asymptotics.asym_density(phi, t, x, n)
        except (DomainError, InapplicableError) as e:
            logging.info(f"[CLI] no asymptotic at x={x}: {e}")
            asym = math.nan
        value = exact.get(float(x), math.nan)
        ratio = value / asym if asym and math.isfinite(asym) else math.nan
        rows.append((x, value, asym, ratio, t, n, label))
    _write_table(["x", "exact", "asymptotic", "ratio", "t", "n", "family"], rows, run_cfg)


def cmd_threshold(phi, args, run_cfg):
    bounds = determinacy.threshold_bounds(phi)
    _write_json({"family": phi.describe(), "lower": _jsonable(bounds.lower), "upper": _jsonable(bounds.upper),
                 "sharp": bounds.sharp_at_lower, "rule_trace": list(bounds.rule_trace)}, run_cfg)


def _times(args, run_cfg):
    return _float_list(args.times) if getattr(args, "times", None) else [run_cfg["t"]]


def cmd_verdict(phi, args, run_cfg):
    _write_json([determinacy.verdict(phi, t).to_dict() for t in _times(args, run_cfg)], run_cfg)


def cmd_power_verdict(phi, args, run_cfg):
    _write_json([determinacy.power_verdict(phi, t).to_dict() for t in _times(args, run_cfg)], run_cfg)


def cmd_selftest(phi, args, run_cfg):
    results = selftest.run_selftest()
    rows = [(r.name, r.passed, r.detail) for r in results]
    _write_table(["criterion", "passed", "detail"], rows, run_cfg)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logging.error(f"[Selftest] failed: {', '.join(failed)}")
        return 1
    return 0


def cmd_examples(phi, args, run_cfg):
    tables = selftest.examples_tables()
    fmt = run_cfg["format"] or "csv"
    if fmt == "json":
        text = _json_text({name: _table_payload(header, rows) for name, header, rows in tables})
    else:
        text = "\n".join(f"# {name}\n" + _csv_text(header, rows) for name, header, rows in tables)
    _emit(text, run_cfg["output"])


COMMANDS = {
    "phi": (cmd_phi, "evaluate phi, phi' and the inverse on a grid"),
    "wgamma": (cmd_wgamma, "evaluate W_phi, W_phi^t, gamma_phi and C_phi"),
    "moments": (cmd_moments, "integer moments (prod phi(k))^t"),
    "density": (cmd_density, "density (or derivative) by Mellin-Barnes inversion"),
    "asym": (cmd_asym, "tail asymptotic against the inverted density"),
    "threshold": (cmd_threshold, "threshold-index bounds"),
    "verdict": (cmd_verdict, "moment determinacy of nu_t"),
    "power-verdict": (cmd_power_verdict, "moment determinacy of X^t"),
    "selftest": (cmd_selftest, "acceptance suite"),
    "examples": (cmd_examples, "reproduction tables for the worked examples"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", help="inline family spec, e.g. 'power_shifted alpha=0.5 m=1'")
    common.add_argument("--config", help="INI file with [family] and [run] sections")
    common.add_argument("--t", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--x", help="comma-separated abscissae (overrides the grid)")
    common.add_argument("--x-min", dest="x_min", type=float)
    common.add_argument("--x-max", dest="x_max", type=float)
    common.add_argument("--count", type=int)
    common.add_argument("--spacing", choices=["linear", "log"])
    common.add_argument("--tol", type=float)
    common.add_argument("--nmax", type=int)
    common.add_argument("--times", help="comma-separated t values for verdict subcommands")
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--workers", type=int)
    common.add_argument("--save-config", dest="save_config", help="write the effective configuration here")
    common.add_argument("--log-file", dest="log_file")
    common.add_argument("--debug", action="store_true")

    parser = argparse.ArgumentParser(prog="BergUrbanikCLI", description="Berg-Urbanik semigroup toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def _configure_logging(args):
    logfile = args.log_file or os.path.join(get_user_data_dir(), "bergurbanik-log.log")
    os.makedirs(os.path.dirname(os.path.abspath(logfile)), exist_ok=True)
    level = logging.DEBUG if args.debug else logging.INFO
    logging.basicConfig(level=level, filename=logfile, filemode='w', format='%(name)s - %(levelname)s - %(message)s')


def _effective_config(args):
    manager = ConfigManager(args.config)
    config = manager.get_config()
    if args.family:
        config["family"] = bernstein.parse_inline(args.family)
    run_cfg = config["run"]
    for key in FLOAT_KEYS + INT_KEYS + ("spacing", "format", "output"):
        value = getattr(args, key, None)
        if value is not None:
            run_cfg[key] = value
    if not run_cfg["tol"] > 0:
        raise ParameterError(f"tol must be positive, got {run_cfg['tol']}", op="run")
    if args.save_config:
        manager.save_config(config, args.save_config)
    return config


def run(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    _configure_logging(args)
    try:
        config = _effective_config(args)
        phi = bernstein.family_from_config(config["family"])
        handler = COMMANDS[args.command][0]
        logging.info(f"[CLI] {args.command} on {phi!r} with {config['run']}")
        code = handler(phi, args, config["run"])
        return code or 0
    except BergUrbanikError as e:
        detail = str(e).replace("\n", " ")
        sys.stderr.write(f"code={e.exit_code} op={e.op} detail={detail}\n")
        logging.error(f"[CLI] {e.op}: {detail}")
        return e.exit_code


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
