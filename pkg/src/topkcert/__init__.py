"""Certified Top-k softmax truncation.

Exact distribution-level identities, deterministic gap/block certificates,
output-level error bounds with value-matrix geometry, a Gaussian design
rule, and certified selection algorithms that stop scoring keys as soon as
a requested total-variation budget is provably met.
"""

from .blocks import (
    BlockMassInterval,
    BlockMassSummary,
    BlockPartition,
    block_gap_certificate,
    block_mass_certificate,
    guaranteed_block_gap,
)
from .cells import (
    CellIndex,
    KeyStore,
    build_index,
    cell_upper_bound,
    load_index,
    save_index,
    score_cell,
)
from .certificates import Certificate, gap_certificate, gap_threshold, multigap_certificate
from .gaussian import (
    GaussianScoreModel,
    k_eps,
    keep_ratio,
    limit_tail_mass,
    phi_cdf,
    phi_quantile,
    phi_survival,
    sample_scores,
    threshold_for_eps,
)
from .outputs import (
    CutResult,
    HeadTailReport,
    attention_output,
    best_certificate,
    cut_from_values,
    head_tail_report,
    minimax_cut,
)
from .search import (
    BatchConfig,
    SearchResult,
    delta_k_search,
    hybrid_search,
    mc_search,
    min_k_exact,
    write_audit_jsonl,
)
from .truncation import ScoreVector, SoftmaxSummary, kl_truncated, softmax, truncate_topk, tv_exact

__version__ = "0.1.0"
