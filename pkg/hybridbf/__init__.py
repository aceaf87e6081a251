"""hybridbf: simulador de precodificación híbrida con redes RF realistas."""

__version__ = "0.3.0"
