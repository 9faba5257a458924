"""Model configuration schemas."""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, model_validator

from config.errors import ConfigError
from config.model_profile import BN_MOMENTUM, FULL_ARCHITECTURE, SCALE_PRESETS
from autodiff.functional import conv_output_size

IntPair = tuple[int, int]


class AblationFlags(BaseModel):
    """Architecture switches of the ablation grid."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    remove_pointwise_conv: bool = False
    remove_temporal_conv: bool = False
    remove_spatial_conv: bool = False
    tcn_dropout_override: Optional[float] = None
    warm_start: Optional[str] = None  # checkpoint path

    @model_validator(mode="after")
    def _check(self) -> "AblationFlags":
        removed = [self.remove_pointwise_conv, self.remove_temporal_conv, self.remove_spatial_conv]
        if sum(removed) > 1:
            raise ConfigError("at most one remove_* ablation flag may be set")
        if self.tcn_dropout_override is not None and not 0.0 <= self.tcn_dropout_override < 1.0:
            raise ConfigError(
                f"tcn_dropout_override must be in [0, 1), got {self.tcn_dropout_override}"
            )
        return self


class ModelConfig(BaseModel):
    """Complete architectural description of an EEGViT-TCNet model.

    Defaults are the full-scale geometry: 129 x 500 input, TCN 64/128/256,
    bridge temporal kernel (1, 36) with stride (1, 36) and padding (0, 2)
    giving 14 tokens, spatial kernel (256, 1), ViT-Base encoder.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    in_channels: int = FULL_ARCHITECTURE["in_channels"]
    timepoints: int = FULL_ARCHITECTURE["timepoints"]
    tcn_channels: tuple[int, ...] = FULL_ARCHITECTURE["tcn_channels"]
    tcn_kernel: int = FULL_ARCHITECTURE["tcn_kernel"]
    tcn_dropout: float = FULL_ARCHITECTURE["tcn_dropout"]
    tcn_dilation_base: int = FULL_ARCHITECTURE["tcn_dilation_base"]
    bridge_filters: int = FULL_ARCHITECTURE["bridge_filters"]
    bridge_kernel_temporal: IntPair = FULL_ARCHITECTURE["bridge_kernel_temporal"]
    bridge_stride_temporal: IntPair = FULL_ARCHITECTURE["bridge_stride_temporal"]
    bridge_padding_temporal: IntPair = FULL_ARCHITECTURE["bridge_padding_temporal"]
    bridge_kernel_spatial: IntPair = FULL_ARCHITECTURE["bridge_kernel_spatial"]
    embed_dim: int = FULL_ARCHITECTURE["embed_dim"]
    vit_depth: int = FULL_ARCHITECTURE["vit_depth"]
    vit_heads: int = FULL_ARCHITECTURE["vit_heads"]
    vit_mlp_ratio: float = FULL_ARCHITECTURE["vit_mlp_ratio"]
    patch_projection_kernel: int = FULL_ARCHITECTURE["patch_projection_kernel"]
    patch_projection_stride: int = FULL_ARCHITECTURE["patch_projection_stride"]
    head_hidden: int = FULL_ARCHITECTURE["head_hidden"]
    head_dropout: float = FULL_ARCHITECTURE["head_dropout"]
    bn_momentum: float = BN_MOMENTUM
    ablation: AblationFlags = AblationFlags()

    @model_validator(mode="after")
    def _check(self) -> "ModelConfig":
        positive = {
            "in_channels": self.in_channels,
            "timepoints": self.timepoints,
            "tcn_kernel": self.tcn_kernel,
            "tcn_dilation_base": self.tcn_dilation_base,
            "bridge_filters": self.bridge_filters,
            "embed_dim": self.embed_dim,
            "vit_depth": self.vit_depth,
            "vit_heads": self.vit_heads,
            "patch_projection_kernel": self.patch_projection_kernel,
            "patch_projection_stride": self.patch_projection_stride,
            "head_hidden": self.head_hidden,
        }
        for name, value in positive.items():
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if not self.tcn_channels or min(self.tcn_channels) < 1:
            raise ConfigError(f"tcn_channels must be nonempty and positive, got {self.tcn_channels}")
        if self.tcn_channels[-1] != self.bridge_kernel_spatial[0]:
            raise ConfigError(
                f"last tcn channel count {self.tcn_channels[-1]} must equal the spatial kernel "
                f"height {self.bridge_kernel_spatial[0]}"
            )
        for name, pair, low in (("bridge_kernel_temporal", self.bridge_kernel_temporal, 1),
                                ("bridge_stride_temporal", self.bridge_stride_temporal, 1),
                                ("bridge_padding_temporal", self.bridge_padding_temporal, 0),
                                ("bridge_kernel_spatial", self.bridge_kernel_spatial, 1)):
            if min(pair) < low:
                raise ConfigError(f"{name} entries must be >= {low}, got {pair}")
        if self.embed_dim % self.vit_heads:
            raise ConfigError(
                f"embed_dim {self.embed_dim} is not divisible by vit_heads {self.vit_heads}"
            )
        for name, rate in (("tcn_dropout", self.tcn_dropout), ("head_dropout", self.head_dropout)):
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {rate}")
        if self.vit_mlp_ratio <= 0:
            raise ConfigError(f"vit_mlp_ratio must be positive, got {self.vit_mlp_ratio}")
        if not 0.0 <= self.bn_momentum <= 1.0:
            raise ConfigError(f"bn_momentum must be in [0, 1], got {self.bn_momentum}")
        if self.bridge_height() != self.bridge_kernel_spatial[0]:
            raise ConfigError(
                f"temporal conv output height {self.bridge_height()} must match the spatial "
                f"kernel height {self.bridge_kernel_spatial[0]}"
            )
        if self.bridge_width() < 1:
            raise ConfigError(
                f"bridge temporal output width is {self.bridge_width()} for T={self.timepoints}"
            )
        if self.token_count() < 1:
            raise ConfigError(
                f"patch projection (kernel {self.patch_projection_kernel}, stride "
                f"{self.patch_projection_stride}) yields no tokens from width {self.bridge_width()}"
            )
        return self

    # --- derived geometry ----------------------------------------------------

    def bridge_height(self) -> int:
        return conv_output_size(self.tcn_channels[-1], self.bridge_kernel_temporal[0],
                                self.bridge_stride_temporal[0], 2 * self.bridge_padding_temporal[0])

    def bridge_width(self, timepoints: Optional[int] = None) -> int:
        t = self.timepoints if timepoints is None else timepoints
        return conv_output_size(t, self.bridge_kernel_temporal[1],
                                self.bridge_stride_temporal[1], 2 * self.bridge_padding_temporal[1])

    def token_count(self, width: Optional[int] = None) -> int:
        w = self.bridge_width() if width is None else width
        return token_count(w, self.patch_projection_kernel, self.patch_projection_stride)

    @property
    def positions(self) -> int:
        """Tokens plus the cls token."""
        return self.token_count() + 1

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.vit_heads

    @property
    def mlp_hidden(self) -> int:
        return int(self.embed_dim * self.vit_mlp_ratio)

    @property
    def effective_tcn_dropout(self) -> float:
        override = self.ablation.tcn_dropout_override
        return self.tcn_dropout if override is None else override

    def replace(self, **changes: Any) -> "ModelConfig":
        """Validated copy with `changes` applied (nested `ablation` dicts are merged)."""
        data = self.model_dump()
        if isinstance(changes.get("ablation"), dict):
            changes["ablation"] = {**data["ablation"], **changes["ablation"]}
        return ModelConfig.model_validate({**data, **changes})


def token_count(width: int, kernel: int, stride: int, padding: int = 0) -> int:
    """floor((W + 2p - k) / s) + 1, the patch-projection output length."""
    return (width + 2 * padding - kernel) // stride + 1


def preset(scale: str, **overrides: Any) -> ModelConfig:
    try:
        base = SCALE_PRESETS[scale]
    except KeyError:
        raise ConfigError(f"unknown scale {scale!r}; choose from {sorted(SCALE_PRESETS)}")
    return ModelConfig.model_validate({**base, **overrides})
