from .epidemic import SimConfig, SimOutcome, draw_truth, simulate

__all__ = ["SimConfig", "SimOutcome", "draw_truth", "simulate"]
