"""Membership of a probe in the spread subgraph's component, at one or two times."""
from dataclasses import dataclass

import numpy as np

from ..dynamics import component_of
from ..errors import InvalidInput


@dataclass(frozen=True)
class MembershipResult:
    single: bool
    shared: bool | None


def _check_probe(snap, sg, probe):
    if not sg.success:
        raise InvalidInput("membership needs a successful spread subgraph")
    rel = np.asarray(snap.pos[probe], dtype=float) - sg.corner
    if snap.domain.periodic:
        rel = np.mod(rel, snap.domain.side)
    if not (np.all(rel >= 0) and np.all(rel < sg.side)):
        raise InvalidInput("probe lies outside the cube")


def probe_in_component(snap, orc, sg, probe):
    """Does ``probe`` share a component of the snapshot graph with the distinguished vertices?"""
    _check_probe(snap, sg, probe)
    target = np.zeros(snap.n, dtype=bool)
    target[sg.distinguished] = True
    _, hit = component_of(orc, snap, [probe], target)
    return bool(hit)


def shared_vertex(snap1, sg1, snap2, sg2, orc):
    """Is some vertex in the component of G1 at t1 and of G2 at t2 (different epochs)?"""
    if snap1.epoch == snap2.epoch:
        raise InvalidInput("the two times must lie in different epochs")
    if not (sg1.success and sg2.success):
        raise InvalidInput("both spread subgraphs must be successful")
    c1, _ = component_of(orc, snap1, sg1.distinguished)
    c2, _ = component_of(orc, snap2, sg2.distinguished)
    return bool(np.any(c1 & c2))


def membership_experiment(snap_pair, orc, spreads, probe):
    s1, s2 = snap_pair
    g1, g2 = spreads
    single = probe_in_component(s1, orc, g1, probe)
    shared = None
    if g2 is not None and s2 is not None:
        shared = shared_vertex(s1, g1, s2, g2, orc)
    return MembershipResult(single, shared)
