"""icdforge: tooling for XML interface control documents.

Parses and validates ICD definition files, computes authoritative frame
bitstreams, renders transport-layer source code from templates with
element-level traceability, and generates/checks I/O interface skeletons.
"""

__version__ = "0.1.0"
