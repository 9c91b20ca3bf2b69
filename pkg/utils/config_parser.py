"""
Lectura de archivos de corrida en formato INI.

    [run]        mode, out, preset
    [params]     d1, d2, chi, alpha, beta, c, M
    [grid]       dim, nx, ny, lx, ly
    [scheme]     dt_max, cfl_safety, steady_tol, t_end, snapshot_times, stop_at_steady
    [steady]     delta, eps_list, cells_per_eps, scan_points, radius
    [initial.u]  constant, term<k> = amp kx ky sx sy
    [initial.v]  igual que [initial.u]

Las listas se escriben separadas por comas. Si [params] omite M y hay
[initial.u], M se toma como la integral del dato inicial.
"""
import configparser
import logging
from typing import Dict, List, Optional

from pydantic import BaseModel, ValidationError

from schemas.config_schema import CosineTerm, GridSpec, InitialDataSpec, RunConfig, SchemeConfig, SteadySpec
from utils.errors import ConfigParseError, ConfigValidationError

logger = logging.getLogger("config_parser")

SECTIONS = ("run", "params", "grid", "scheme", "steady", "initial.u", "initial.v")
LIST_KEYS = {"snapshot_times", "eps_list"}


def _read(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source="<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("content before the first [section] header", line=exc.lineno) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigParseError(exc.message.split(": ", 1)[-1], line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigParseError(f"cannot parse {line.strip()!r}", line=lineno) from exc
    return parser


def _section(parser: configparser.ConfigParser, name: str) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for key, value in parser.items(name):
        if key == "dim" and value.strip().isdigit():
            out[key] = int(value)
        elif key in LIST_KEYS:
            out[key] = [tok.strip() for tok in value.split(",") if tok.strip()]
        else:
            out[key] = value.strip()
    return out


def _initial(parser: configparser.ConfigParser, name: str) -> InitialDataSpec:
    raw = dict(parser.items(name))
    if "constant" not in raw:
        raise ConfigValidationError(f"[{name}] requires a 'constant' key")
    terms: List[CosineTerm] = []
    for key in sorted((k for k in raw if k != "constant"), key=_term_order):
        if not key.startswith("term"):
            raise ConfigValidationError(f"unknown key '{key}' in [{name}]")
        parts = raw[key].split()
        if not 1 <= len(parts) <= 5:
            raise ConfigValidationError(f"[{name}] {key} must read 'amp kx ky sx sy', got {raw[key]!r}")
        values = dict(zip(("amp", "kx", "ky", "sx", "sy"), parts))
        terms.append(_validated(CosineTerm, values, f"[{name}] {key}"))
    return _validated(InitialDataSpec, {"constant": raw["constant"], "terms": terms}, f"[{name}]")


def _term_order(key: str):
    suffix = key[4:]
    return (0, int(suffix)) if key.startswith("term") and suffix.isdigit() else (1, key)


def _validated(model: type, data: dict, where: str) -> BaseModel:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigValidationError(f"{where}: {_describe(exc)}") from exc


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "value"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(text: str, mode: Optional[str] = None) -> RunConfig:
    """
    Convierte el texto INI en un RunConfig validado. `mode` (de la línea de
    comandos) tiene prioridad sobre [run] mode.
    """
    parser = _read(text)
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigValidationError(f"unknown section(s): {', '.join(unknown)}")

    run = _section(parser, "run") if parser.has_section("run") else {}
    data: Dict[str, object] = {}
    for key in ("out", "preset"):
        if key in run:
            data[key] = run.pop(key)
    data["mode"] = mode or run.pop("mode", None)
    run.pop("mode", None)
    if run:
        raise ConfigValidationError(f"unknown key(s) in [run]: {', '.join(run)}")
    if data["mode"] is None:
        raise ConfigValidationError("no mode given on the command line or in [run]")

    grid = _validated(GridSpec, _section(parser, "grid") if parser.has_section("grid") else {}, "[grid]")
    data["grid"] = grid
    if parser.has_section("scheme"):
        data["scheme"] = _validated(SchemeConfig, _section(parser, "scheme"), "[scheme]")
    if parser.has_section("steady"):
        data["steady"] = _validated(SteadySpec, _section(parser, "steady"), "[steady]")
    for name in ("initial.u", "initial.v"):
        if parser.has_section(name):
            data[name.replace(".", "_")] = _initial(parser, name)

    if parser.has_section("params"):
        params = _section(parser, "params")
        params.setdefault("dim", grid.dim)
        params.setdefault("volume", grid.volume)
        if "M" not in params and "initial_u" in data:
            params["M"] = initial_mass(data["initial_u"], grid)
            logger.info(f"M tomada de la integral del dato inicial: {params['M']!r}")
        data["params"] = params

    config = _validated(RunConfig, data, "config")
    logger.debug(f"Configuración leída: modo={config.mode}")
    return config


def initial_mass(spec: InitialDataSpec, grid_spec: GridSpec) -> float:
    from gridcontext.grid import integrate
    from solvers.timestepper import initial_field

    return integrate(initial_field(spec, grid_spec.build(), "u0"))


def load_config(path: str, mode: Optional[str] = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), mode=mode)


MANIFEST_PARAM_KEYS = ("d1", "d2", "chi", "alpha", "beta", "c", "M")
MANIFEST_SCHEME_KEYS = ("dt_max", "cfl_safety", "steady_tol", "t_end", "snapshot_times", "stop_at_steady")


def manifest_to_ini(manifest: Dict[str, str]) -> str:
    """
    Texto INI de la corrida descrita por un manifiesto de simulate/reproduce.
    Los flotantes del manifiesto van en repr, así que la corrida se reproduce
    bit a bit.
    """
    def need(key: str) -> str:
        if key not in manifest:
            raise ConfigValidationError(f"manifest lacks the key '{key}'")
        return manifest[key]

    lines = ["[run]", "mode = simulate"]
    if manifest.get("preset", "none") != "none":
        lines.append(f"preset = {manifest['preset']}")
    lines += ["", "[params]"] + [f"{key} = {need(key)}" for key in MANIFEST_PARAM_KEYS]

    dim = need("grid_dim")
    lines += ["", "[grid]", f"dim = {dim}", f"nx = {need('nx')}"]
    if dim == "2":
        lines.append(f"ny = {need('ny')}")
    lines += [f"lx = {need('lx')}", f"ly = {need('ly')}", "", "[scheme]"]
    for key in MANIFEST_SCHEME_KEYS:
        value = need(key)
        if key == "snapshot_times" and value == "none":
            continue
        lines.append(f"{key} = {value}")

    for prefix, section in (("u0", "initial.u"), ("v0", "initial.v")):
        lines += ["", f"[{section}]", f"constant = {need(prefix + '_constant')}"]
        terms = [key[len(prefix) + 1:] for key in manifest if key.startswith(prefix + "_term")]
        lines += [f"{term} = {manifest[prefix + '_' + term]}" for term in sorted(terms, key=_term_order)]
    return "\n".join(lines) + "\n"


def config_from_manifest(path: str) -> RunConfig:
    from gridcontext.snapshots import read_manifest

    manifest = read_manifest(path)
    if manifest.get("mode") not in ("simulate", "reproduce"):
        raise ConfigValidationError(f"{path} is not the manifest of a simulate or reproduce run")
    return parse_config(manifest_to_ini(manifest))


def field_help(model: type) -> str:
    """Lista 'clave (defecto): descripción' de un modelo, para --help"""
    lines = []
    for name, info in model.model_fields.items():
        default = "required" if info.is_required() else repr(info.get_default(call_default_factory=True))
        lines.append(f"    {name} ({default}): {info.description or ''}".rstrip(": "))
    return "\n".join(lines)
