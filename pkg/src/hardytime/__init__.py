"""Forward and backward time observables on discretized Hardy spaces."""

__version__ = "0.1.0"
