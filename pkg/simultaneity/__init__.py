"""
Simulator for preferred-frame Quantum Mechanics versus Multisimultaneity.
"""

__version__ = "1.0.0"
