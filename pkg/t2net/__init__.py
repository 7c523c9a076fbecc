"""t2net — joint MRI reconstruction and super-resolution with task transformers."""

__version__ = "0.1.0"
