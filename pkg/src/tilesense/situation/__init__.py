from .candidate import CandidateBoard, build_candidate_board
from .dataset import Dataset, generate_dataset, load_dataset, save_dataset
from .gcn import GcnConfig, GcnNet, gcn_forward, predict

__all__ = [
    "CandidateBoard",
    "Dataset",
    "GcnConfig",
    "GcnNet",
    "build_candidate_board",
    "gcn_forward",
    "generate_dataset",
    "load_dataset",
    "predict",
    "save_dataset",
]
