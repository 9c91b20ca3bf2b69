import os
import logging
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

# Configurar logging
LOG_LEVEL = os.getenv("SPIKEKIT_LOG_LEVEL", "INFO").upper()
logging.basicConfig(level=getattr(logging, LOG_LEVEL, logging.INFO),
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

# Configuración desde variables de entorno
OUTPUT_DIR = os.getenv("SPIKEKIT_OUTPUT_DIR", "runs")
KRYLOV_RTOL = float(os.getenv("SPIKEKIT_KRYLOV_RTOL", "1e-12"))
NEWTON_MAX_ITER = int(os.getenv("SPIKEKIT_NEWTON_MAX_ITER", "100"))

CODE_VERSION = "1.0.0"


def resolve_out_dir(out: Optional[str], default_name: str) -> str:
    """Directorio de salida de una corrida: el pedido o OUTPUT_DIR/<default_name>"""
    path = out or os.path.join(OUTPUT_DIR, default_name)
    os.makedirs(path, exist_ok=True)
    return path
