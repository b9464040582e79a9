"""Cluster-routed decentralized visual place recognition: simulation and evaluation."""

from .clustering import ClusterModel, assign_cluster, assign_clusters, sse, train_kmeans, train_kmeans_best
from .datagen import MixtureSpec, SyntheticTrajectory, make_loop_trajectory, random_mixture, restrict_to_subspace, sample_mixture
from .descriptors import DescriptorStore, FrameId, TemporalExclusion, l2_distance, nearest_neighbor
from .evaluation import ConfusionMatrix, PRCurve, confusion_matrix, pr_curve, relative_auc, run_pair, sweep
from .routing import BandwidthLedger, OwnershipMap, broadcast_bytes_baseline, query_bytes, route, worst_balance_ratio
from .simulation import Dataset, Mode, QueryRecord, SwarmConfig, ground_truth_match, run_simulation, split_trajectory

__version__ = "0.1.0"
