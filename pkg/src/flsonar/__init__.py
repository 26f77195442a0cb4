"""Forward-looking sonar collision avoidance simulation for small AUVs."""

__version__ = "0.1.0"
