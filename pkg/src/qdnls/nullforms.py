"""Pointwise nonlinearity evaluation and exact-identity residual checks.

Covers the quadratic nonlinearity assembled from the coefficient tensor,
the per-axis gauge forms and antisymmetric gradient forms, the Leibniz
rules for J on bilinear products, the 1/t-gain rewrites of the forms,
and the action of J on them.  Each identity is measured as a relative
L2 residual on supplied test fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .problem import CoefficientTensor, MassTriple, NotNullError, is_null
from .spectral import Field, StateTriple, dealias, derivative, l2_norm
from .vectorfield import apply_J, gamma_fields, gamma_norms_by_index, multi_indices

RESIDUAL_FLOOR = 1e-300

GAUGE_FORMS = ("G1", "G2", "G3")
STRONG_FORMS = ("Q1", "Q2", "Q3")

# J masses acting on the two arguments of each form, as (first, second)
# in units of (m1, m2, m3) selectors.
_FORM_ARG_MASSES = {
    "G1": (2, 3),
    "G2": (3, 1),
    "G3": (1, 2),
    "Q1": (2, 3),
    "Q2": (3, 1),
    "Q3": (1, 2),
}


@dataclass(frozen=True)
class IdentityResidual:
    """Relative L2 residual of one exact identity on one test case."""

    identity: str
    residual: float
    time: float | None = None
    masses: tuple[float, float, float] | None = None
    axes: tuple[int, ...] = ()


def relative_residual(lhs: Field, rhs: Field) -> float:
    num = l2_norm(lhs - rhs)
    den = max(l2_norm(lhs), l2_norm(rhs), RESIDUAL_FLOOR)
    return num / den


def eval_G(j: int, axis: int, f: Field, g: Field, masses: MassTriple) -> Field:
    """Null gauge form of equation j along one axis."""
    m1, m2, m3 = masses.as_floats()
    df = derivative(f, axis)
    dg = derivative(g, axis)
    if j == 1:
        vals = m2 * np.conj(f.values) * dg.values + m3 * np.conj(df.values) * g.values
    elif j == 2:
        vals = m3 * f.values * np.conj(dg.values) + m1 * df.values * np.conj(g.values)
    elif j == 3:
        vals = m1 * f.values * dg.values - m2 * df.values * g.values
    else:
        raise ValueError(f"gauge form index {j} not in 1..3")
    return Field(f.grid, vals)


def _q_values(a, b, f: Field, g: Field, conj_first: bool, conj_second: bool):
    fa, fb = derivative(f, a).values, derivative(f, b).values
    ga, gb = derivative(g, a).values, derivative(g, b).values
    if conj_first:
        fa, fb = np.conj(fa), np.conj(fb)
    if conj_second:
        ga, gb = np.conj(ga), np.conj(gb)
    return fa * gb - fb * ga


def eval_Q(a: int, b: int, f: Field, g: Field, conjugate_first: bool = False) -> Field:
    """Antisymmetric gradient form along the axis pair (a, b)."""
    if a == b:
        raise ValueError("strong form needs two distinct axes")
    return Field(f.grid, _q_values(a, b, f, g, conjugate_first, False))


def eval_nonlinearity(
    tensor: CoefficientTensor,
    state: StateTriple,
    use_dealias: bool = True,
) -> tuple[Field, Field, Field]:
    """The three quadratic right-hand sides of the system on a state.

    Equation 1 conjugates its first factor (second unknown), equation 2
    its second factor (first unknown), equation 3 conjugates nothing.
    """
    grid = state.grid
    if tensor.dim != grid.dim:
        raise ValueError("tensor dimension does not match the grid")
    # slot 0 is the field itself, slot a its derivative along axis a
    slots = []
    for j in (1, 2, 3):
        u = state.field(j)
        slots.append([u.values] + [derivative(u, a).values for a in range(1, grid.dim + 1)])
    c = tensor.as_array()
    factor_of = {1: (1, 2), 2: (2, 0), 3: (0, 1)}  # unknown index per factor slot
    conj_of = {1: (True, False), 2: (False, True), 3: (False, False)}
    out = []
    for eq in (1, 2, 3):
        acc = np.zeros(grid.shape, dtype=complex)
        iu, iv = factor_of[eq]
        cu, cv = conj_of[eq]
        for alpha in range(grid.dim + 1):
            for beta in range(grid.dim + 1):
                coeff = c[eq - 1, alpha, beta]
                if coeff == 0:
                    continue
                left = slots[iu][alpha]
                right = slots[iv][beta]
                if cu:
                    left = np.conj(left)
                if cv:
                    right = np.conj(right)
                acc = acc + coeff * left * right
        field = Field(grid, acc)
        out.append(dealias(field) if use_dealias else field)
    return tuple(out)


def leibniz_residual(
    eq: int, f: Field, g: Field, masses: MassTriple, t: float, axis: int
) -> IdentityResidual:
    """Residual of the J Leibniz rule on the bilinear pattern of equation eq.

    Holds exactly under mass resonance; with non-resonant masses the
    residual is O(1), which is what the negative control measures.
    """
    m1, m2, m3 = masses.as_floats()
    if eq == 1:
        lhs = apply_J(Field(f.grid, np.conj(f.values) * g.values), m1, t, axis)
        rhs = Field(
            f.grid,
            -(m2 / m1) * np.conj(apply_J(f, m2, t, axis).values) * g.values
            + (m3 / m1) * np.conj(f.values) * apply_J(g, m3, t, axis).values,
        )
    elif eq == 2:
        lhs = apply_J(Field(f.grid, f.values * np.conj(g.values)), m2, t, axis)
        rhs = Field(
            f.grid,
            (m3 / m2) * apply_J(f, m3, t, axis).values * np.conj(g.values)
            - (m1 / m2) * f.values * np.conj(apply_J(g, m1, t, axis).values),
        )
    elif eq == 3:
        lhs = apply_J(Field(f.grid, f.values * g.values), m3, t, axis)
        rhs = Field(
            f.grid,
            (m1 / m3) * apply_J(f, m1, t, axis).values * g.values
            + (m2 / m3) * f.values * apply_J(g, m2, t, axis).values,
        )
    else:
        raise ValueError(f"equation index {eq} not in 1..3")
    return IdentityResidual(
        identity=f"leibniz_eq{eq}_axis{axis}",
        residual=relative_residual(lhs, rhs),
        time=t,
        masses=masses.as_floats(),
        axes=(axis,),
    )


def extra_decay_residual(
    form: str,
    f: Field,
    g: Field,
    masses: MassTriple,
    t: float,
    axes: tuple[int, ...],
    aux_masses: tuple[float, float] | None = None,
) -> IdentityResidual:
    """Residual of the 1/t-gain rewrite of a gauge or strong form.

    Gauge forms take a single axis and need the resonant mass triple;
    strong forms take an axis pair plus free auxiliary masses (defaults:
    the masses J carries on the form's arguments).
    """
    if t <= 0.0:
        raise ValueError("the rewrite divides by t; need t > 0")
    m1, m2, m3 = masses.as_floats()
    grid = f.grid
    if form in GAUGE_FORMS:
        if not masses.resonant():
            raise ValueError("gauge-form rewrite is stated under mass resonance")
        (a,) = axes
        j = int(form[1])
        lhs = eval_G(j, a, f, g, masses)
        if j == 1:
            vals = (1j * m2 * m3 / t) * (
                np.conj(apply_J(f, m2, t, a).values) * g.values
                - np.conj(f.values) * apply_J(g, m3, t, a).values
            )
        elif j == 2:
            vals = (1j * m3 * m1 / t) * (
                -apply_J(f, m3, t, a).values * np.conj(g.values)
                + f.values * np.conj(apply_J(g, m1, t, a).values)
            )
        else:
            vals = (1j * m1 * m2 / t) * (
                apply_J(f, m1, t, a).values * g.values
                - f.values * apply_J(g, m2, t, a).values
            )
        rhs = Field(grid, vals)
    elif form in ("Q", "Qbar"):
        a, b = axes
        sel_f, sel_g = _FORM_ARG_MASSES["Q1" if form == "Qbar" else "Q3"]
        if aux_masses is None:
            aux_masses = (float(masses.mass(sel_f)), float(masses.mass(sel_g)))
        m, mu = aux_masses
        if m == 0 or mu == 0:
            raise ValueError("auxiliary masses must be nonzero")
        ja = apply_J(f, m, t, a).values
        jb = apply_J(f, m, t, b).values
        ka = apply_J(g, mu, t, a).values
        kb = apply_J(g, mu, t, b).values
        fa, fb = derivative(f, a).values, derivative(f, b).values
        ga, gb = derivative(g, a).values, derivative(g, b).values
        if form == "Q":
            lhs = eval_Q(a, b, f, g, conjugate_first=False)
            vals = (
                (mu / (1j * t)) * (fa * kb - fb * ka)
                + (m / (1j * t)) * (ja * gb - jb * ga)
                + (m * mu / t**2) * (ja * kb - jb * ka)
            )
        else:
            lhs = eval_Q(a, b, f, g, conjugate_first=True)
            vals = (
                (mu / (1j * t)) * (np.conj(fa) * kb - np.conj(fb) * ka)
                - (m / (1j * t)) * (np.conj(ja) * gb - np.conj(jb) * ga)
                - (m * mu / t**2) * (np.conj(ja) * kb - np.conj(jb) * ka)
            )
        rhs = Field(grid, vals)
    else:
        raise ValueError(f"unknown form tag {form!r}")
    return IdentityResidual(
        identity=f"extra_decay_{form}_axes{''.join(map(str, axes))}",
        residual=relative_residual(lhs, rhs),
        time=t,
        masses=masses.as_floats(),
        axes=tuple(axes),
    )


def _apply_J_multi(u: Field, mass: float, t: float, beta: tuple[int, ...]) -> Field:
    out = u
    for axis, reps in enumerate(beta, start=1):
        for _ in range(reps):
            out = apply_J(out, mass, t, axis)
    return out


def _form_value(
    form: str, axes: tuple[int, ...], f: Field, g: Field, masses: MassTriple
) -> Field:
    """Evaluate a tagged form with its structural conjugation pattern."""
    if form in GAUGE_FORMS:
        return eval_G(int(form[1]), axes[0], f, g, masses)
    a, b = axes
    if form == "Q1":
        return Field(f.grid, _q_values(a, b, f, g, True, False))
    if form == "Q2":
        return Field(f.grid, _q_values(a, b, f, g, False, True))
    if form == "Q3":
        return Field(f.grid, _q_values(a, b, f, g, False, False))
    raise ValueError(f"unknown form tag {form!r}")


def _conjugation_pattern(form: str) -> tuple[bool, bool]:
    eq = int(form[1])
    return {1: (True, False), 2: (False, True), 3: (False, False)}[eq]


def j_action_residual(
    form: str,
    alpha: tuple[int, ...],
    f: Field,
    g: Field,
    masses: MassTriple,
    t: float,
    form_axes: tuple[int, ...],
) -> IdentityResidual:
    """Residual of the J-action identity on a gauge or strong form.

    First-order J actions carry explicit mass-ratio weights (with the
    lower-order gauge corrections in the strong case).  At |alpha| = 2
    only membership in the span of the expected right-hand family is
    asserted, via a least-squares fit.
    """
    if not masses.resonant():
        raise ValueError("J-action identities require the resonance relation")
    order = sum(alpha)
    if order > 2:
        raise ValueError("only |alpha| <= 2 is supported")
    if form not in GAUGE_FORMS + STRONG_FORMS:
        raise ValueError(f"unknown form tag {form!r}")
    eq = int(form[1])
    m_act = float(masses.mass(eq))
    sel_f, sel_g = _FORM_ARG_MASSES[form]
    m_f, m_g = float(masses.mass(sel_f)), float(masses.mass(sel_g))
    m1, m2, m3 = masses.as_floats()
    base = _form_value(form, form_axes, f, g, masses)
    lhs = _apply_J_multi(base, m_act, t, alpha)
    tag = f"j_action_{form}_alpha{''.join(map(str, alpha))}_axes{''.join(map(str, form_axes))}"

    if order == 0:
        residual = relative_residual(lhs, base)
    elif order == 1:
        c = alpha.index(1) + 1
        conj_f, conj_g = _conjugation_pattern(form)
        jf = _form_value(form, form_axes, apply_J(f, m_f, t, c), g, masses)
        jg = _form_value(form, form_axes, f, apply_J(g, m_g, t, c), masses)
        if eq == 1:
            rhs = Field(f.grid, -(m2 / m1) * jf.values + (m3 / m1) * jg.values)
        elif eq == 2:
            rhs = Field(f.grid, (m3 / m2) * jf.values - (m1 / m2) * jg.values)
        else:
            rhs = Field(f.grid, (m1 / m3) * jf.values + (m2 / m3) * jg.values)
        if form in STRONG_FORMS:
            a, b = form_axes
            ga = eval_G(eq, a, f, g, masses).values
            gb = eval_G(eq, b, f, g, masses).values
            if eq == 1:
                corr = (float(c == a) / m1) * gb - (float(c == b) / m1) * ga
            elif eq == 2:
                corr = (float(c == b) / m2) * ga - (float(c == a) / m2) * gb
            else:
                corr = (float(c == b) / m3) * ga - (float(c == a) / m3) * gb
            rhs = Field(f.grid, rhs.values + corr)
        residual = relative_residual(lhs, rhs)
    else:
        # membership check: project LHS on the expected right-hand family
        basis = []
        jf_pows = {
            beta: _apply_J_multi(f, m_f, t, beta) for beta in multi_indices(f.grid.dim, 2)
        }
        jg_pows = {
            gamma: _apply_J_multi(g, m_g, t, gamma) for gamma in multi_indices(f.grid.dim, 2)
        }
        for beta, fb in jf_pows.items():
            for gamma, gb in jg_pows.items():
                if sum(beta) + sum(gamma) <= 2:
                    basis.append(_form_value(form, form_axes, fb, gb, masses).values)
        if form in STRONG_FORMS:
            for c_ax in range(1, f.grid.dim + 1):
                for beta, fb in jf_pows.items():
                    for gamma, gb in jg_pows.items():
                        if sum(beta) + sum(gamma) <= 1:
                            basis.append(eval_G(eq, c_ax, fb, gb, masses).values)
        matrix = np.stack([b.ravel() for b in basis], axis=1)
        target = lhs.values.ravel()
        coeffs, *_ = np.linalg.lstsq(matrix, target, rcond=None)
        misfit = np.linalg.norm(matrix @ coeffs - target)
        residual = float(misfit / max(np.linalg.norm(target), RESIDUAL_FLOOR))
    return IdentityResidual(
        identity=tag,
        residual=float(residual),
        time=t,
        masses=masses.as_floats(),
        axes=tuple(form_axes),
    )


def extra_decay_bound(
    state: StateTriple,
    tensor: CoefficientTensor,
    masses: MassTriple,
    t: float,
    order: int,
    require_null: bool = True,
) -> float:
    """Measured constant of the 1/t nonlinearity bound.

    Returns <t> * sum_j sum_{|alpha|<=order} ||Gamma^alpha F_j|| divided by
    (sup of the low-order pointwise Gamma envelope of the state) times the
    aggregate Gamma norm of order order+1.  Bounded in t when the tensor
    is null; grows linearly in t through the non-null path.
    """
    if require_null and not is_null(tensor, masses):
        raise NotNullError("extra-decay bound is stated for null tensors")
    forces = eval_nonlinearity(tensor, state)
    numer = 0.0
    for j in (1, 2, 3):
        table = gamma_norms_by_index(forces[j - 1], float(masses.mass(j)), t, order)
        numer += sum(table.values())
    if numer == 0.0:
        return 0.0
    low = order // 2 + 1
    envelope_sq = np.zeros(state.grid.shape)
    high_sq = 0.0
    for j in (1, 2, 3):
        u = state.field(j)
        m = float(masses.mass(j))
        for fld in gamma_fields(u, m, t, low).values():
            envelope_sq = envelope_sq + np.abs(fld.values) ** 2
        high_sq += sum(v**2 for v in gamma_norms_by_index(u, m, t, order + 1).values())
    sup_low = float(np.sqrt(np.max(envelope_sq)))
    denom = sup_low * float(np.sqrt(high_sq))
    if denom == 0.0:
        return 0.0
    return float(np.sqrt(1.0 + t * t) * numer / denom)
