"""Heterogeneity-aware client summarization and clustering for federated learning."""

from .bench import BenchConfig, BenchReport, run_bench
from .clustering import ClusterModel, adjusted_rand_index, dbscan, kmeans
from .coreset import Coreset, apportion, build_coreset
from .datamodel import (
    ClientDataset,
    PopulationModel,
    PopulationSpec,
    ValidationError,
    generate_population,
)
from .embedder import (
    EmbeddingProvider,
    IdentityEmbedder,
    PrecomputedEmbedder,
    RandomProjectionEmbedder,
    make_embedder,
)
from .fdsm import (
    FormatError,
    export_embedded_dataset,
    import_embedded_dataset,
    read_dataset,
    read_summaries,
    write_dataset,
    write_summaries,
)
from .report import render_report, save_figures
from .simulate import (
    DeviceProfile,
    RoundLog,
    SimConfig,
    default_profiles,
    run_simulation,
    selection_coverage,
)
from .summary import (
    DistributionSummary,
    HistogramSummary,
    conditional_summary,
    encoder_summary,
    label_summary,
)

__version__ = "0.1.0"
