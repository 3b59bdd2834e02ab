"""Run configuration: ``defaults.yaml`` plus the loader in :mod:`.settings`."""

from .settings import RunConfig, load_run_config

__all__ = ["RunConfig", "load_run_config"]
