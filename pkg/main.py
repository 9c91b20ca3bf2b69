"""
spikekit: laboratorio numérico de picos de frontera para el modelo de
Keller-Segel con sensibilidad logarítmica saturada.

    spikekit <mode> --config <path> [--out <dir>]
    spikekit reproduce fig1..fig5 [--out <dir>]
    spikekit simulate --manifest <manifest.txt> [--out <dir>]

Códigos de salida: 0 = éxito, 2 = error de validación, 3 = fallo del solver.
"""
import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from controllers import (delta_controller, ground_state_controller, simulation_controller,
                         steady_controller, sweep_controller)
from schemas.base_schemas import ResultBase
from schemas.config_schema import GridSpec, RunConfig, SchemeConfig, SteadySpec
from schemas.params_schema import ModelParams
from utils.config_parser import config_from_manifest, field_help, load_config
from utils.errors import ConfigValidationError, SpikeKitError
from utils.presets import preset_config, preset_names
from utils.settings import CODE_VERSION

logger = logging.getLogger("spikekit")

# Registro de modos (un controlador por modo)
HANDLERS: Dict[str, Callable[[RunConfig], ResultBase]] = {
    "analyze-delta": delta_controller.handle,
    "ground-state": ground_state_controller.handle,
    "solve-steady": steady_controller.handle,
    "sweep-epsilon": sweep_controller.handle,
    "simulate": simulation_controller.handle,
    "reproduce": simulation_controller.handle,
}

DEFAULTS_HELP = f"""
Claves del archivo de configuración (defecto entre paréntesis):
  [params]
{field_help(ModelParams)}
  [grid]
{field_help(GridSpec)}
  [scheme]
{field_help(SchemeConfig)}
  [steady]
{field_help(SteadySpec)}
  [initial.u] / [initial.v]
    constant: nivel constante
    term<k> = amp kx ky sx sy: amp cos(kx pi (x - sx)) cos(ky pi (y - sy))
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikekit",
        description="Picos de frontera del modelo de Keller-Segel con sensibilidad ln(v + c)",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"spikekit {CODE_VERSION}")
    parser.add_argument("mode", choices=sorted(HANDLERS), help="Modo de ejecución")
    parser.add_argument("preset", nargs="?", choices=preset_names() + ["fig4"],
                        help="Experimento predefinido (solo en modo reproduce)")
    parser.add_argument("--config", help="Archivo INI de la corrida")
    parser.add_argument("--manifest", help="manifest.txt de una corrida simulate/reproduce a repetir (modo simulate)")
    parser.add_argument("--out", help="Directorio de salida")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.mode == "reproduce" and args.preset:
        return preset_config(args.preset, out=args.out)
    if args.manifest:
        if args.mode != "simulate" or args.config:
            raise ConfigValidationError("--manifest only applies to mode simulate, without --config")
        config = config_from_manifest(args.manifest)
    elif not args.config:
        raise ConfigValidationError(f"mode {args.mode} requires --config")
    else:
        config = load_config(args.config, mode=args.mode)
    if args.out:
        config = config.model_copy(update={"out": args.out})
    return config


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        result = HANDLERS[config.mode](config)
    except SpikeKitError as exc:
        logger.error(f"{type(exc).__name__}: {exc.detail}")
        return exc.exit_code
    logger.info(result.message)
    for path in result.artifacts:
        logger.info(f"  -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
