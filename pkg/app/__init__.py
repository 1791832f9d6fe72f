"""
Paquete principal de SketchKRR: kernel ridge regression resuelta con
gradiente conjugado precondicionado por sketches de random features.

Aquí solo dejamos metadatos básicos del paquete. La API HTTP está en
app.main y la línea de comandos en app.cli.
"""

__app_name__ = "SketchKRR"
__version__ = "1.0.0"
