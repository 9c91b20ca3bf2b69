from pydantic import BaseModel, Field, ConfigDict
from typing import List, Optional, Generic, TypeVar

# Generic type for result models
T = TypeVar('T')

class ResultBase(BaseModel, Generic[T]):
    """
    Modelo base de resultado para todos los modos de la CLI.

    Proporciona una estructura consistente para todos los resultados,
    incluyendo un campo de éxito, un mensaje, los datos (opcional) y la
    lista de artefactos escritos en disco.
    """
    success: bool = Field(True, description="Indica si la corrida fue exitosa")
    message: str = Field("Run completed", description="Mensaje informativo sobre el resultado de la corrida")
    data: Optional[T] = Field(None, description="Datos retornados por el modo (si aplica)")
    artifacts: List[str] = Field(default_factory=list, description="Rutas de los archivos generados")

    model_config = ConfigDict(
        arbitrary_types_allowed=True,
        json_schema_extra={
            "example": {
                "success": True,
                "message": "delta analysis written",
                "data": "Depende del modo",
                "artifacts": ["runs/analyze/manifest.txt"]
            }
        }
    )
