"""Document layout metrics and diffusion-based layout generation.

The library covers three areas:

* layout modelling: class-labelled boxes, token serialization, COCO and
  JSONL ingestion (``core``, ``io``);
* evaluation: an exact earth-mover document distance with per-class
  breakdowns and missing-class penalties, a DocSim reconstruction,
  sequence Wasserstein distances, coverage/overlap, and Hungarian set
  scores (``transport``, ``metrics``, ``matching``);
* generation: discrete-sequence Gaussian diffusion over embedded layout
  tokens with rounding back to boxes (``schedule``, ``diffusion``), plus
  SVG rendering and crop/paste mosaic planning.
"""

from .core import (ClassSchema, DequantReport, Layout, LayoutElement,
                   TokenSequence, Vocabulary, dequantize,
                   dequantize_with_report, quantize, sort_reading_order)
from .errors import (DocLayoutError, EmptySideError, FormatError,
                     NumericalError, SchemaMismatchError, TokenStructureError,
                     ValidationError)
from .io import emit_jsonl, ingest_coco, ingest_jsonl, read_jsonl, write_jsonl
from .matching import Assignment, hungarian, set_score_docemd, set_score_docsim
from .metrics import (CorpusSummary, DocEmdConfig, MetricReport, corpus_summary,
                      coverage_pct, doc_emd, doc_emd_matrix, docsim,
                      docsim_matrix, overlap_pct, wasserstein_seq)
from .schedule import (NoiseSchedule, posterior_mean, posterior_variance,
                       q_sample, q_sample_iterated)
from .transport import (FlowPlan, PointMass, emd, emd_lp_oracle, rasterize,
                        sinkhorn)

__version__ = "0.1.0"

__all__ = [
    "ClassSchema", "Layout", "LayoutElement", "Vocabulary", "TokenSequence",
    "DequantReport", "quantize", "dequantize", "dequantize_with_report",
    "sort_reading_order",
    "ingest_coco", "ingest_jsonl", "emit_jsonl", "read_jsonl", "write_jsonl",
    "PointMass", "FlowPlan", "rasterize", "emd", "emd_lp_oracle", "sinkhorn",
    "DocEmdConfig", "MetricReport", "doc_emd", "doc_emd_matrix", "docsim",
    "docsim_matrix", "wasserstein_seq", "overlap_pct", "coverage_pct",
    "CorpusSummary", "corpus_summary",
    "Assignment", "hungarian", "set_score_docemd", "set_score_docsim",
    "NoiseSchedule", "q_sample", "q_sample_iterated", "posterior_mean",
    "posterior_variance",
    "DocLayoutError", "ValidationError", "FormatError", "NumericalError",
    "SchemaMismatchError", "EmptySideError", "TokenStructureError",
    "__version__",
]
