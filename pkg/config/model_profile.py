"""Architecture presets, recording geometry and published reference figures."""

# Recording geometry
EEG_CHANNELS = 129  # 128 electrodes + reference
SAMPLING_RATE_HZ = 500
DEFAULT_TIMEPOINTS = 500  # one-second window

# 24-inch 16:9 monitor
SCREEN_MM = {
    "diagonal_in": 24.0,
    "width_mm": 531.4,
    "height_mm": 298.9,
}
GRID_POSITIONS_PER_AXIS = 5  # 5 x 5 = 25 fixation targets
GRID_INSET_FRACTION = 0.1

# Full-scale architecture (ViT-Base geometry)
FULL_ARCHITECTURE = {
    "in_channels": EEG_CHANNELS,
    "timepoints": DEFAULT_TIMEPOINTS,
    "tcn_channels": (64, 128, 256),
    "tcn_kernel": 3,
    "tcn_dropout": 0.75,
    "tcn_dilation_base": 2,
    "bridge_filters": 256,
    "bridge_kernel_temporal": (1, 36),
    "bridge_stride_temporal": (1, 36),
    "bridge_padding_temporal": (0, 2),
    "bridge_kernel_spatial": (256, 1),
    "embed_dim": 768,
    "vit_depth": 12,
    "vit_heads": 12,
    "vit_mlp_ratio": 4.0,
    "patch_projection_kernel": 1,
    "patch_projection_stride": 1,
    "head_hidden": 1000,
    "head_dropout": 0.1,
}

# Desk scale: runs in seconds on a laptop CPU, used by the test suite
DESK_ARCHITECTURE = {
    **FULL_ARCHITECTURE,
    "timepoints": 64,
    "tcn_channels": (8, 16, 32),
    # 8-channel blocks do not train at lr 1e-4 under the full-scale 0.75
    "tcn_dropout": 0.25,
    "bridge_filters": 16,
    "bridge_kernel_temporal": (1, 8),
    "bridge_stride_temporal": (1, 8),
    "bridge_padding_temporal": (0, 0),
    "bridge_kernel_spatial": (32, 1),
    "embed_dim": 64,
    "vit_depth": 2,
    "vit_heads": 4,
    "head_hidden": 32,
}

# Benchmark scale: full 500-sample window (14 bridge tokens), encoder-heavy
BENCH_ARCHITECTURE = {
    **FULL_ARCHITECTURE,
    "tcn_channels": (8, 16, 32),
    "bridge_filters": 16,
    "bridge_kernel_spatial": (32, 1),
    "embed_dim": 192,
    "vit_depth": 4,
    "vit_heads": 4,
    "head_hidden": 64,
}

SCALE_PRESETS = {
    "full": FULL_ARCHITECTURE,
    "desk": DESK_ARCHITECTURE,
    "bench": BENCH_ARCHITECTURE,
}

# Normalisation constants
BN_MOMENTUM = 0.1
BN_EPS = 1e-5
LN_EPS = 1e-6
INIT_EMBED_STD = 0.02

# Patch-projection (kernel, stride) geometries swept by the benchmark
DEFAULT_SWEEP = [(1, 1), (2, 2), (7, 7)]
FULL_SWEEP = [(1, 1), (2, 2), (3, 3), (7, 7), (14, 14)]

# Published full-scale results on the Absolute Position task, RMSE in mm,
# mean and std over five runs. Reference only: not reproducible at desk scale.
PUBLISHED_BASELINE_RMSE = {
    "Naive Guessing": (123.3, 0.0),
    "KNN": (119.7, 0.0),
    "RBF SVR": (123.0, 0.0),
    "Linear Regression": (118.3, 0.0),
    "Random Forest": (116.7, 0.1),
    "CNN": (70.4, 1.1),
    "EEGViT (Pre-trained)": (55.4, 0.2),
    "EEGViT-TCNet": (51.8, 0.6),
}

PUBLISHED_ABLATION_RMSE = {
    "full": ("EEGViT-TCNet", 51.8, 0.6),
    "no_pointwise": ("No Pointwise Conv Layer", 52.5, 0.8),
    "no_temporal": ("No Temporal Conv Layer", 55.0, 0.5),
    "no_spatial": ("No Spatial Conv Layer", 55.1, 0.6),
    "dropout_0": ("0% Dropout", 54.1, 0.6),
    "dropout_25": ("25% Dropout", 52.5, 0.4),
    "dropout_50": ("50% Dropout", 52.1, 0.4),
    "cold_start": ("No Pretrained ViT", 53.2, 0.5),
}

PUBLISHED_SPEEDUP = 4.32
