"""Software twin of a two-generator microgrid bench.

Plant physics, bench instrumentation, the supervisory controller, the
deterministic scenario engine, and the live operator service. Layers
communicate only through the signals the hardware exposed: duty
cycles and switch commands go in, quantized telemetry comes out.
"""

__version__ = "0.1.0"
