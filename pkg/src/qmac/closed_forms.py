"""Closed-form second moments of two-sender receiver front ends.

These are hand-derived expressions used to cross-check the circuit engine.
``cp_k = sqrt(N_S,k (N_S,k + 1)) exp(i theta_k)`` is the signal-idler
correlation of sender ``k`` and ``N* = tau (eta N_S,1 + (1 - eta) N_S,2) + N_B``
is the received photon number. Photon numbers are ``<a^dag a>``; a cross term
``c`` between detected modes ``u`` and ``w`` is ``<u w^dag>``.
"""

from __future__ import annotations

from cmath import exp, sqrt as csqrt
from math import sqrt


def signal_idler_correlation(n_s: float, theta: float) -> complex:
    """``<a_idler a_signal>`` of a TMSV whose signal is phase-shifted by ``theta``."""
    return sqrt(n_s * (n_s + 1.0)) * exp(1j * theta)


def _nstar(ns1, ns2, eta, tau, nb):
    return tau * (eta * ns1 + (1.0 - eta) * ns2) + nb


def serial_opar(ns1, ns2, eta, tau, nb, g1, g2, cp1, cp2) -> dict[str, complex]:
    """Detected idlers after two cascaded OPAs on the received mode.

    Returns photon numbers ``a`` (idler 1), ``s`` (idler 2) and their cross
    term ``c``.
    """
    ns = _nstar(ns1, ns2, eta, tau, nb)
    k1 = sqrt((g1 - 1.0) * g1 * tau * eta)
    a = g1 * ns1 + 2.0 * k1 * cp1.real + (g1 - 1.0) * (1.0 + ns)
    s = (
        g2 * ns2
        + 2.0 * sqrt((g2 - 1.0) * g2 * g1 * tau * (1.0 - eta)) * cp2.real
        + (g2 - 1.0) * ((g1 - 1.0) * ns1 + g1 * (1.0 + ns) + 2.0 * (k1 * cp1).real)
    )
    c = sqrt(g2 - 1.0) * (
        sqrt((g1 - 1.0) * g1) * (ns + 1.0 + ns1)
        + (g1 - 1.0) * sqrt(tau * eta) * cp1.conjugate()
        + g1 * sqrt(tau * eta) * cp1
    ) + cp2.conjugate() * sqrt(tau * (1.0 - eta) * g2 * (g1 - 1.0))
    return {"a": a, "s": s, "c": c}


def parallel_opar(ns1, ns2, eta, tau, nb, g1, g2, cp1, cp2) -> dict[str, complex]:
    """Detected idlers when the received mode is split ``eta : 1 - eta`` first."""
    ns = _nstar(ns1, ns2, eta, tau, nb)
    a = (
        eta * (g1 - 1.0) * nb
        + 2.0 * eta * sqrt((g1 - 1.0) * g1 * tau) * cp1.real
        + eta * (g1 - 1.0) * tau * (eta * ns1 + (1.0 - eta) * ns2)
        + g1 * ns1
        + g1
        - 1.0
    )
    s = (
        (g2 - 1.0) * ((1.0 - eta) * (nb + eta * tau * ns1) + (1.0 - eta) ** 2 * tau * ns2)
        + g2 * (ns2 + 1.0)
        + 2.0 * (eta - 1.0) * sqrt((g2 - 1.0) * g2 * tau) * cp2.real
        - 1.0
    )
    c = -sqrt((1.0 - eta) * eta * (g2 - 1.0)) * (
        sqrt(g1 - 1.0) * ns + cp1 * sqrt(g1 * tau)
    ) + cp2.conjugate() * csqrt((1.0 - eta) * eta * (g1 - 1.0) * g2 * tau)
    return {"a": a, "s": s, "c": c}


def serial_pcr(ns1, ns2, eta, tau, nb, g1, g2, cp1, cp2) -> dict[str, complex]:
    """Phase-conjugate receiver with two cascaded conjugators.

    Detected modes are ordered ``(X1, Y1, X2, Y2)``: ``a1, s1`` are the
    photon numbers of ``X1, Y1`` and ``c1 = <X1 Y1^dag>``; likewise for slice 2.
    ``a3 = <X1 X2^dag>``, ``s3 = <Y1 Y2^dag>``, ``c31 = <X1 Y2^dag>`` and
    ``c32 = <Y1 X2^dag>`` couple the slices.
    """
    ns = _nstar(ns1, ns2, eta, tau, nb)
    r1 = 2.0 * cp1.real * sqrt(eta * (g1 - 1.0) * tau)
    i1 = 2.0j * cp1.imag * sqrt(eta * (g1 - 1.0) * tau)
    common1 = eta * (g1 - 1.0) * tau * ns1 - (eta - 1.0) * (g1 - 1.0) * tau * ns2 + (g1 - 1.0) * (nb + 1.0)
    a1 = 0.5 * (r1 + common1 + ns1)
    s1 = 0.5 * (-r1 + common1 + ns1)
    c1 = 0.5 * (-i1 - common1 + ns1)
    u = cp2.conjugate() * sqrt((1.0 - eta) * (g1 - 1.0) * tau)
    v = cp1 * sqrt(eta * g1 * (g2 - 1.0) * tau)
    w = sqrt((g1 - 1.0) * g1 * (g2 - 1.0)) * (ns + 1.0)
    a3 = 0.5 * (u + v + w)
    s3 = 0.5 * (-u - v + w)
    c31 = 0.5 * (u - v - w)
    c32 = 0.5 * (-u + v - w)
    k2 = sqrt((1.0 - eta) * g1 * (g2 - 1.0) * tau)
    amp2 = g1 * (g2 - 1.0) * (ns + 1.0)
    a2 = 0.5 * (2.0 * cp2.real * k2 + amp2 + ns2)
    s2 = 0.5 * (-2.0 * cp2.real * k2 + amp2 + ns2)
    c2 = 0.5 * (-2.0j * cp2.imag * k2 - amp2 + ns2)
    return {
        "a1": a1, "s1": s1, "c1": c1,
        "a3": a3, "s3": s3, "c31": c31, "c32": c32,
        "a2": a2, "s2": s2, "c2": c2,
    }
