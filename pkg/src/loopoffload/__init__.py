"""Loop-level FPGA offload selection for C programs."""

__version__ = "0.1.0"
