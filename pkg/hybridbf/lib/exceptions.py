"""
Excepciones propias del simulador de precodificación híbrida.

Este módulo define la jerarquía de errores que lanzan las bibliotecas del
paquete.  Permite a los llamadores (en particular la CLI y el motor de
barridos) distinguir entre un escenario mal configurado, una covarianza
numéricamente rota, una asignación de haces imposible y una realización de
canal que deja el precodificador sin solución.
"""

from __future__ import annotations

from typing import Optional


class HybridSimError(RuntimeError):
    """Error base del paquete."""

    pass


class ConfigError(HybridSimError, ValueError):
    """Error de validación de un escenario, atribuido a campo y línea."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.field = field
        self.line = line
        super().__init__(self.__str__())

    def __str__(self) -> str:
        prefix = []
        if self.line is not None:
            prefix.append(f"línea {self.line}")
        if self.field:
            prefix.append(f"campo {self.field}")
        if prefix:
            return f"{', '.join(prefix)}: {self.message}"
        return self.message


class CovarianceError(HybridSimError, ValueError):
    """Covarianza espacial inválida (parámetros o autovalores negativos)."""

    pass


class AllocationError(HybridSimError, ValueError):
    """No es posible asignar los haces pedidos a los grupos."""

    pass


class SingularConfigurationError(HybridSimError):
    """Canal efectivo sin rango completo o demasiado mal condicionado."""

    def __init__(self, message: str, realization: Optional[int] = None):
        self.message = message
        self.realization = realization
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.realization is None:
            return self.message
        return f"realización {self.realization}: {self.message}"

    def at_realization(self, index: int) -> "SingularConfigurationError":
        """Devuelve una copia del error con el índice de realización adjunto."""
        return SingularConfigurationError(self.message, realization=index)
