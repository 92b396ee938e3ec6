# Import experiments to register them
from src.experiments import isometry, loops, rus  # noqa: F401
