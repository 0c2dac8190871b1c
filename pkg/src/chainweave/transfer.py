"""Mediated data movement along a single data-flow link.

A transfer pulls from the source tool (live export, falling back to the
cached last export), applies the link's pipeline, and delivers to the
target tool. Failures abort atomically: nothing is stored and no record is
produced unless delivery succeeded.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

from .data import DataArtifact, apply_pipeline, payload_hash
from .errors import (
    ChainweaveError,
    DanglingReference,
    DeliveryFailed,
    SourceUnavailable,
    TransformFailed,
)
from .graph import CoordinationGraph, CoordinationLink, LinkKind
from .host import ACTIVE
from .journal import Session, TransferRecord


def source_available(link: CoordinationLink, session: Session, host) -> bool:
    """True when the link's source can supply data right now."""
    if link.data is None:
        return False
    if host.state(link.source_tool_id) == ACTIVE:
        return True
    key = (link.source_tool_id, link.data.source_channel)
    return key in session.channel_cache


def execute_transfer(
    link: CoordinationLink,
    *,
    graph: CoordinationGraph,
    host,
    session: Session,
    clock: Callable[[], float],
    activation_seq: int,
    alloc_id: Callable[[], str],
) -> TransferRecord:
    """Move one artifact across the link and journal the completed transfer."""
    if link.kind is not LinkKind.DATA_FLOW or link.data is None:
        raise ValueError(f"link {link.id!r} is not a data-flow link")
    data = link.data

    if host.state(link.source_tool_id) == ACTIVE:
        try:
            exported = host.export_data(
                link.source_tool_id, data.source_channel, origin_seq=activation_seq
            )
        except SourceUnavailable:
            raise
        except ChainweaveError as exc:
            raise SourceUnavailable(
                f"link {link.id!r}: export from {link.source_tool_id!r} failed: {exc}",
                subject=link.id,
            ) from exc
        in_artifact = replace(exported, id=alloc_id())
    else:
        cached = session.channel_cache.get((link.source_tool_id, data.source_channel))
        if cached is None:
            raise SourceUnavailable(
                f"link {link.id!r}: source tool {link.source_tool_id!r} inactive and no cached export",
                subject=link.id,
            )
        in_artifact = session.data_store[cached]

    pipeline = graph.pipeline(data.pipeline_id)
    if pipeline is None:
        raise DanglingReference(f"link {link.id!r} references unknown pipeline", subject=data.pipeline_id)
    try:
        out_artifact = apply_pipeline(pipeline, in_artifact, new_id=alloc_id())
    except ChainweaveError as exc:
        raise TransformFailed(f"link {link.id!r}: {exc}", subject=link.id) from exc
    out_artifact = replace(out_artifact, origin_tool=link.source_tool_id, origin_seq=activation_seq)

    try:
        host.load_data(link.target_tool_id, data.target_channel, out_artifact)
    except ChainweaveError as exc:
        raise DeliveryFailed(
            f"link {link.id!r}: delivery to {link.target_tool_id!r} failed: {exc}", subject=link.id
        ) from exc

    session.data_store[in_artifact.id] = in_artifact
    session.data_store[out_artifact.id] = out_artifact
    session.channel_cache[(link.source_tool_id, data.source_channel)] = in_artifact.id
    record = TransferRecord(
        link_id=link.id,
        in_artifact_id=in_artifact.id,
        out_artifact_id=out_artifact.id,
        timestamp=clock(),
        activation_seq=activation_seq,
        in_hash=payload_hash(in_artifact.payload),
        out_hash=payload_hash(out_artifact.payload),
    )
    return record
