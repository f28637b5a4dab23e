"""Binary policy artifacts

Layout, little-endian throughout:

    header   <4sHHId16s4d   magic b"CMDP", format version, reserved, n, p, design tag, prior pseudo-counts
    payload  float64[...]   allocation probability to control at every decision state, in storage order
"""

from __future__ import annotations

import dataclasses
import logging
import pathlib
import struct

import numpy as np

from trialapi import statespace
from trialapi.errors import ConfigError
from trialapi.mdp import PolicyTable

logger = logging.getLogger(__name__)

MAGIC = b"CMDP"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHHId16s4d")
PAYLOAD_DTYPE = np.dtype("<f8")


@dataclasses.dataclass
class PolicyArtifact:
    policy: PolicyTable
    design: str = ""
    prior: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    @property
    def n(self) -> int:
        return self.policy.n


def write_policy(path: pathlib.Path, artifact: PolicyArtifact) -> pathlib.Path:
    """Write stage by stage so a code-compressed policy is never expanded in full"""
    policy = artifact.policy
    tag = artifact.design.encode("ascii")
    if len(tag) > 16:
        raise ValueError(f"design tag {artifact.design!r} is longer than 16 bytes")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, FORMAT_VERSION, 0, policy.n, policy.p, tag, *artifact.prior))
        for t in range(policy.n):
            f.write(policy.stage(t).astype(PAYLOAD_DTYPE, copy=False).tobytes())
    logger.debug("wrote %s policy for n=%d to %s", artifact.design, policy.n, path)
    return path


def read_policy(path: pathlib.Path) -> PolicyArtifact:
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read policy {path}: {e}") from e
    if len(data) < HEADER.size:
        raise ConfigError(f"{path} is too short to be a policy artifact")
    magic, version, _, n, p, tag, *prior = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ConfigError(f"{path} is not a policy artifact")
    if version != FORMAT_VERSION:
        raise ConfigError(f"{path} has format version {version}, expected {FORMAT_VERSION}")
    expected = statespace.indexer(n).nonterminal_size * PAYLOAD_DTYPE.itemsize
    if len(data) - HEADER.size != expected:
        raise ConfigError(f"{path} holds {len(data) - HEADER.size} payload bytes, a policy for n={n} has {expected}")

    values = np.frombuffer(data, dtype=PAYLOAD_DTYPE, offset=HEADER.size).astype(np.float64)
    try:
        policy = PolicyTable.from_probabilities(n, p, values)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    return PolicyArtifact(policy, tag.rstrip(b"\0").decode("ascii"), tuple(prior))  # type: ignore[arg-type]
