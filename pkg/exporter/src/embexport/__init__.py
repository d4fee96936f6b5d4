"""Embedding exporters for the WEMB/SEMB interchange formats."""

from .export import ExportJob, export_sentences, export_word_encoder, export_word_table, run_job

__all__ = [
    "ExportJob",
    "export_sentences",
    "export_word_encoder",
    "export_word_table",
    "run_job",
]
