"""Cost model and analysis toolkit for security hooks on filesystem syscalls."""

__version__ = "0.1.0"
