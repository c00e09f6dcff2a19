"""Epidemic forecasting toolkit: series preprocessing, surrogate forecasters tuned by a
genetic algorithm, a SEIR model and a hospital discrete-event simulator."""

__version__ = "0.1.0"
