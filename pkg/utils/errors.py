"""
Jerarquía de errores de spikekit.

Cada error lleva un `detail` legible y un `exit_code` que la CLI devuelve al
sistema operativo (2 = validación, 3 = fallo del solver).
"""
from typing import Optional

import numpy as np


class SpikeKitError(Exception):
    """Error base de la aplicación"""
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# --- Errores de validación (exit code 2) ---

class ValidationFailure(SpikeKitError):
    exit_code = 2


class InvalidParameterError(ValidationFailure, ValueError):
    """Parámetro fuera de su rango admisible (p <= 1, c_delta <= 0, ...)"""


class NonexistenceError(ValidationFailure):
    """No existe solución para el delta pedido (delta < delta0)"""


class ResolutionError(ValidationFailure):
    """La malla no resuelve la escala pedida"""


class ConfigParseError(ValidationFailure):
    def __init__(self, detail: str, line: Optional[int] = None):
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line


class ConfigValidationError(ValidationFailure):
    """El archivo de configuración se leyó pero viola un invariante"""


# --- Errores del solver (exit code 3) ---

class SolverError(SpikeKitError):
    exit_code = 3


class NonconvergenceError(SolverError):
    def __init__(self, detail: str, last_iterate: Optional[np.ndarray] = None):
        super().__init__(detail)
        self.last_iterate = last_iterate


class ShootingFailureError(SolverError):
    """No se encontró un intervalo de disparo para el ground state"""


class EpsilonTooLargeError(SolverError):
    """rho(delta) - m no cambia de signo en el intervalo de búsqueda"""


class StiffnessError(SolverError):
    """El paso de tiempo cayó por debajo del mínimo permitido"""


class NonfiniteStateError(SolverError):
    """Apareció NaN o Inf en el estado de la simulación"""
