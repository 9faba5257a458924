"""Transformer encoder over bridge tokens, and the gaze regression head."""

from autodiff import functional as F
from autodiff.rng import RngStream
from autodiff.tensor import Tensor
from config.errors import ConfigError, DimensionError
from phase3_model.config import ModelConfig
from phase3_model.layers import Dropout, LayerNorm, Linear, Conv1d, Module, embedding, init_embedding


class MultiHeadAttention(Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.q = Linear(dim, dim)
        self.k = Linear(dim, dim)
        self.v = Linear(dim, dim)
        self.proj = Linear(dim, dim)

    def _split(self, x: Tensor) -> Tensor:
        b, n, e = x.shape
        return x.reshape(b, n, self.heads, e // self.heads).transpose(0, 2, 1, 3)

    def forward(self, x: Tensor) -> Tensor:
        b, n, e = x.shape
        out = F.attention(self._split(self.q(x)), self._split(self.k(x)), self._split(self.v(x)))
        return self.proj(out.transpose(0, 2, 1, 3).reshape(b, n, e))


class MLP(Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.fc1 = Linear(dim, hidden)
        self.fc2 = Linear(hidden, dim)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(F.gelu(self.fc1(x)))


class EncoderLayer(Module):
    """Pre-norm block: x + attn(norm1(x)), then x + mlp(norm2(x))."""

    def __init__(self, dim: int, heads: int, mlp_hidden: int):
        super().__init__()
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, heads)
        self.norm2 = LayerNorm(dim)
        self.mlp = MLP(dim, mlp_hidden)

    def forward(self, x: Tensor) -> Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class ViTEncoder(Module):
    """Patch projection -> [cls] + tokens -> position embeddings -> encoder layers -> norm.

    Returns the normalised cls representation [B, embed_dim].
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        e = config.embed_dim
        self.patch_proj = None if config.ablation.remove_pointwise_conv else Conv1d(
            e, e, config.patch_projection_kernel, stride=config.patch_projection_stride,
        )
        self.cls_token = embedding(1, 1, e)
        self.pos_embed = embedding(1, config.positions, e)
        self.layers = []
        for i in range(config.vit_depth):
            layer = EncoderLayer(e, config.vit_heads, config.mlp_hidden)
            setattr(self, f"layer{i}", layer)
            self.layers.append(layer)
        self.norm = LayerNorm(e)

    def reset_parameters(self, rng: RngStream) -> None:
        init_embedding(self.cls_token, rng.substream("cls_token"))
        init_embedding(self.pos_embed, rng.substream("pos_embed"))

    def tokens(self, x: Tensor) -> Tensor:
        """[B, E, 1, W] -> [B, T_tokens, E]."""
        if x.ndim != 4 or x.shape[2] != 1:
            raise DimensionError(f"encoder input must be [B, E, 1, W], got {x.shape}", axis=2)
        if x.shape[1] != self.config.embed_dim:
            raise DimensionError(
                f"encoder expects {self.config.embed_dim} channels, got {x.shape[1]}", axis=1
            )
        b, e, _, w = x.shape
        if w < 1:
            raise DimensionError("encoder input width must be >= 1", axis=3)
        k, s = self.config.patch_projection_kernel, self.config.patch_projection_stride
        if w < k:
            raise ConfigError(f"patch projection kernel {k} is wider than the {w} bridge tokens")
        h = x.reshape(b, e, w)
        if self.patch_proj is not None:
            h = self.patch_proj(h)
        else:
            h = F.avg_pool1d(h, k, s)
        return h.transpose(0, 2, 1)

    def forward(self, x: Tensor) -> Tensor:
        tokens = self.tokens(x)
        b, n, e = tokens.shape
        if n + 1 != self.pos_embed.shape[1]:
            raise ConfigError(
                f"position embeddings cover {self.pos_embed.shape[1]} positions but the input "
                f"yields {n} tokens + cls"
            )
        cls = F.broadcast_to(self.cls_token, (b, 1, e))
        h = F.concat([cls, tokens], axis=1) + self.pos_embed
        for layer in self.layers:
            h = layer(h)
        return self.norm(h)[:, 0]


class RegressionHead(Module):
    """cls representation -> linear -> dropout -> linear -> (x, y)."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.fc1 = Linear(config.embed_dim, config.head_hidden)
        self.dropout = Dropout(config.head_dropout)
        self.fc2 = Linear(config.head_hidden, 2)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(self.dropout(self.fc1(x)))
