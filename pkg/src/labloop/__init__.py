"""labloop: a closed-loop research pipeline engine.

Turns a dataset and a research query into ideas, a structured data report,
an executed experiment, and critic-gated revisions.  All model-backed steps
go through a pluggable gateway so the whole pipeline can run offline against
deterministic mock providers.
"""

__version__ = "0.1.0"
