from .replicates import ReplicateStudy, replicate_study, run_replicate, summarize

__all__ = ["ReplicateStudy", "replicate_study", "run_replicate", "summarize"]
