"""Bibliotecas del simulador.

Modelo de canal one-ring, redes analógicas (totalmente conectada y Butler),
precodificación por grupos con ZF, métricas de potencia, escenarios YAML,
motor Monte Carlo y escritura de resultados.  Los módulos se importan
individualmente según la necesidad.
"""
