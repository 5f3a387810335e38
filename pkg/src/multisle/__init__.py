"""Multiple SLE(3) partition functions, Loewner chains and critical Ising interfaces."""
__version__ = "0.1.0"
