"""Vector-dataset profiling, index-family selection and task-centric evaluation."""

__version__ = "0.1.0"
