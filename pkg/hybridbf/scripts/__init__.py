"""Paquete de scripts ejecutables."""