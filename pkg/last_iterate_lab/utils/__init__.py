from .progress import RunProgress
