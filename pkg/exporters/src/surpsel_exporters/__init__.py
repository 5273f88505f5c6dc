"""Offline exporters feeding the segment-selection pipeline's file formats."""

from .align_convert import convert, parse_ctm, parse_gentle_json, write_alignment_jsonl
from .frame_embeddings import export_frame_embeddings, write_sfv1_file
from .manifest import ExporterManifest
from .token_scores import export_token_scores, score_transcript

__version__ = "0.1.0"
