"""Elliptic-curve signature calculus.

An ECDL instance (base curve of prime order ell over F_p, points Qt,
Rt) is lifted to a curve over Q with Q rational and R defined over a
real quadratic field K in which p and ell split.  The localisation of
the one-dimensional space of degree-ell homogeneous-space classes
ramified at u, u', v is encoded by the pair (alpha, beta) of pairing
ratios, tied to the discrete log by m + n*alpha + beta = 0 mod ell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import sympy

from .arith import bsgs_dlog, jacobi
from .errors import (
    AssumptionViolated,
    BadInput,
    BudgetExhausted,
    PrecisionLoss,
    SingularSystem,
    VerificationFailed,
)
from .ecurve import (
    Curve,
    INFINITY,
    LocalClass,
    Point,
    curve_group_ops,
    ec_group_order,
    ec_scalar_mul,
    local_class,
)
from .quadfield import (
    Place,
    QuadInt,
    RealQuadField,
    _matrix_rank_mod,
    embed,
    split_places,
    squarefree_kernel,
)

__all__ = [
    "EcSignatureInstance",
    "EcSignature",
    "lift_ec_instance",
    "signature_from_ecdl",
    "ecdl_from_signature",
    "coker_dim",
    "scan_torsion_places",
    "ec_instance_to_json",
    "ec_instance_from_json",
]


@dataclass(frozen=True)
class EcSignatureInstance:
    """A lifted homogeneous-space signature instance.

    The lifted curve E: y^2 = x^3 + a x + b_r has integer coefficients,
    good reduction at ell, and reduces to the base curve mod p.  Q is
    rational, R has coordinates in K = Q(sqrt(D)).  The independence
    certificate is the 2x2 matrix of local classes of (Q, R) at the two
    places over ell; it must be invertible.  The triviality of the
    ell-part of the everywhere-locally-trivial classes is an assumption
    flag, never computed.
    """

    p: int
    ell: int
    base_a: int
    base_b: int
    Qt: Point
    Rt: Point
    a: int
    b_r: int
    Q: Point
    R: Point
    K: RealQuadField
    place_u: Place
    place_u_conj: Place
    place_v: Place
    place_v_conj: Place
    d_ell: int
    certificate: tuple[tuple[int, int], tuple[int, int]]
    seed: int
    sha_assumption: bool = True

    @property
    def base_curve(self) -> Curve:
        return Curve(self.base_a, self.base_b, ("fp", self.p))

    @property
    def lifted_curve(self) -> Curve:
        return Curve(self.a, self.b_r, ("rational",))

    def certificate_det(self) -> int:
        (a11, a12), (a21, a22) = self.certificate
        return (a11 * a22 - a12 * a21) % self.ell


@dataclass(frozen=True)
class EcSignature:
    """The pair (alpha, beta) of local pairing ratios in F_ell.

    alpha is the u-to-v ratio of pairings against Q, beta the u'-to-v
    ratio against R; they satisfy m + n*alpha + beta = 0 for the
    instance's true discrete logs m (at v) and n (at u).
    """

    alpha: int
    beta: int
    provenance: str


def _require_prime_order_base(curve: Curve, ell: int):
    order = ec_group_order(curve)
    if order != ell or not sympy.isprime(ell):
        raise BadInput(f"base curve order {order} must equal the prime ell={ell}")


def _reduce_point(point: Point, place: Place, q: int) -> Point | None:
    """Reduction of an integral global point at a degree-1 place."""
    coords = []
    for c in (point.x, point.y):
        coords.append(embed(c, place, 1).value if isinstance(c, (int, QuadInt))
                      else int(c) % q)
    return Point(coords[0], coords[1])


def lift_ec_instance(base_a: int, base_b: int, Qt: Point, Rt: Point,
                     p: int, ell: int, seed: int,
                     budget: int = 1000) -> EcSignatureInstance:
    """Lift an ECDL instance to a signature instance over K.

    Q lifts Qt to a rational point by sweeping the y-coordinate through
    v + r*p (which fixes b_r); the sweep rejects curves with bad or
    ell-divisible reduction at ell.  R lifts Rt into E(K) with
    K = Q(sqrt(squarefree kernel of the cubic value)); the sweep keeps
    retrying until ell splits in K and the independence certificate is
    invertible.  Deterministic given (inputs, seed).
    """
    base = Curve(base_a % p, base_b % p, ("fp", p))
    _require_prime_order_base(base, ell)
    if Qt is INFINITY or Rt is INFINITY:
        raise BadInput("base points must be nonzero")
    if not base.contains(Qt) or not base.contains(Rt):
        raise BadInput("base points must lie on the base curve")
    x0, y0 = Qt.x % p, Qt.y % p
    mu0, nu0 = Rt.x % p, Rt.y % p
    counters: dict[str, int] = {}

    def reject(reason: str) -> None:
        counters[reason] = counters.get(reason, 0) + 1

    a = base_a % p
    attempts = 0
    for r in range(budget):
        if attempts >= budget:
            break
        y_lift = y0 + r * p
        b_r = y_lift * y_lift - (x0**3 + a * x0)
        E = Curve(a, b_r, ("rational",))
        Q = Point(x0, y_lift)
        attempts += 1
        if E.discriminant() % ell == 0:
            reject("bad_reduction_at_ell")
            continue
        d_ell = ec_group_order(E.reduction(ell))
        if d_ell % ell == 0:
            reject("ell_divides_reduced_order")
            continue
        try:
            cQ = local_class(Q, E, ell).c
        except PrecisionLoss:
            reject("precision_loss")
            continue
        if cQ == 0:
            reject("Q_trivial_at_ell")
            continue
        for r2 in range(min(32, budget - attempts)):
            attempts += 1
            mu = mu0 + r2 * p
            w = mu**3 + a * mu + b_r
            if w <= 0:
                reject("cubic_value_not_positive")
                continue
            D, f = squarefree_kernel(w)
            if D == 1:
                reject("cubic_value_square")
                continue
            if D % ell == 0 or jacobi(D % ell, ell) != 1:
                reject("ell_not_split")
                continue
            if f % p == 0 or D % p == 0:
                reject("p_label_degenerate")
                continue
            K = RealQuadField(D)
            u_places = split_places(ell, K)
            v_places = split_places(p, K)
            if len(v_places) != 2:
                reject("p_not_split")
                continue
            # R = (mu, f*sqrt(D)); v is the place where f*sqrt(D) = nu0
            R = Point(K.element(mu, 0), K.from_sqrt_coords(0, f))
            images = [embed(R.y, w_, 1).value for w_ in v_places]
            if nu0 not in images:
                reject("no_v_label")
                continue
            vi = images.index(nu0)
            try:
                cR_u = local_class(R, E, ell, place=u_places[0]).c
                cR_uc = local_class(R, E, ell, place=u_places[1]).c
            except PrecisionLoss:
                reject("precision_loss")
                continue
            det = (cQ * cR_uc - cQ * cR_u) % ell
            if det == 0:
                reject("certificate_singular")
                continue
            if cR_uc == 0:
                # relabel so that R generates E(K_u')/ell (the rho choice)
                u_places = [u_places[1], u_places[0]]
                cR_u, cR_uc = cR_uc, cR_u
            certificate = ((cQ % ell, cQ % ell), (cR_u, cR_uc))
            instance = EcSignatureInstance(
                p=p, ell=ell, base_a=base.a, base_b=base.b, Qt=Point(x0, y0),
                Rt=Point(mu0, nu0), a=a, b_r=b_r, Q=Q, R=R, K=K,
                place_u=u_places[0], place_u_conj=u_places[1],
                place_v=v_places[vi], place_v_conj=v_places[1 - vi],
                d_ell=d_ell, certificate=certificate, seed=seed,
            )
            assert _reduce_point(Q, instance.place_v, p) == instance.Qt
            assert _reduce_point(R, instance.place_v, p) == instance.Rt
            return instance
    raise BudgetExhausted(attempts, counters)


def _local_coordinates(instance: EcSignatureInstance, point: Point,
                       place: Place) -> int:
    """Coordinate of a global point in E(K_w)/ell = F_ell at a place.

    Places over ell use the formal-group class; places over p use the
    discrete log of the reduction against the reduction of Q (a
    generator, the reduced curve having prime order ell).
    """
    ell = instance.ell
    if place.q == ell:
        return local_class(point, instance.lifted_curve, ell, place=place).c
    reduced_curve = instance.lifted_curve.reduction(place.q)
    P_red = _reduce_point(point, place, place.q)
    gen = _reduce_point(instance.Q, place, place.q)
    return bsgs_dlog(gen, P_red, ell, **curve_group_ops(reduced_curve)) % ell


def signature_from_ecdl(instance: EcSignatureInstance, ecdl_oracle) -> EcSignature:
    """The signature pair from an ECDL oracle on the reduction at v.

    With reference points rho_v = rho_u = Q and rho_u' = R, the
    localisation coordinates of Q and R give two independent linear
    relations in (alpha, beta); the oracle supplies the v-coordinate of
    R (its discrete log against Q on the reduced curve).
    """
    ell = instance.ell
    a_v, a_u = 1, 1
    cQ_u = local_class(instance.Q, instance.lifted_curve, ell).c
    cQ_uc = cQ_u  # Q is rational: identical images at both places over ell
    cR_u = local_class(instance.R, instance.lifted_curve, ell,
                       place=instance.place_u).c
    cR_uc = local_class(instance.R, instance.lifted_curve, ell,
                        place=instance.place_u_conj).c
    if cQ_u == 0 or cR_uc == 0:
        raise SingularSystem("reference points fail to generate locally")
    a_uc = cQ_uc * pow(cR_uc, -1, ell) % ell
    b_u = cR_u * pow(cQ_u, -1, ell) % ell
    b_uc = 1
    b_v = ecdl_oracle(instance.Qt, instance.Rt) % ell
    # solve a_v + a_u*X + a_uc*Y = 0, b_v + b_u*X + b_uc*Y = 0
    det = (a_u * b_uc - a_uc * b_u) % ell
    if det == 0:
        raise SingularSystem("independence certificate violated")
    inv = pow(det, -1, ell)
    alpha = (-(a_v * b_uc - a_uc * b_v)) * inv % ell
    beta = (-(a_u * b_v - b_u * a_v)) * inv % ell
    return EcSignature(alpha=alpha, beta=beta, provenance="ecdl-oracle")


def ecdl_from_signature(instance: EcSignatureInstance, sig_oracle) -> int:
    """m with Rt = m*Qt, recovered from a signature oracle.

    n is the ratio of formal-group classes of R and Q at u; the oracle
    supplies (alpha, beta); then m = -n*alpha - beta mod ell, verified
    by scalar multiplication on the base curve before returning.
    """
    ell = instance.ell
    cQ = local_class(instance.Q, instance.lifted_curve, ell,
                     place=instance.place_u).c
    cR = local_class(instance.R, instance.lifted_curve, ell,
                     place=instance.place_u).c
    if cQ == 0:
        raise SingularSystem("Q is locally trivial at u; instance invalid")
    n = cR * pow(cQ, -1, ell) % ell
    sig = sig_oracle(instance)
    m = (-n * sig.alpha - sig.beta) % ell
    base = instance.base_curve
    if ec_scalar_mul(m, instance.Qt, base) != instance.Rt:
        raise VerificationFailed("recovered m fails Rt = m*Qt on the base curve")
    return m


def _bad_place_proxy_ok(instance: EcSignatureInstance, place: Place) -> bool:
    """Proxy for the vanishing of E(K_w)/ell at a bad place: ell must
    divide neither Nw - 1 nor the discriminant valuation there."""
    ell = instance.ell
    disc = abs(instance.lifted_curve.discriminant())
    v = 0
    while disc % place.q == 0:
        disc //= place.q
        v += 1
    return (place.norm - 1) % ell != 0 and v % ell != 0


def coker_dim(instance: EcSignatureInstance, extra_places=()) -> int:
    """Dimension of coker(E(K)/ell -> sum of local E(K_w)/ell over S).

    S is {u, u'} together with the extra places.  Assumes the recorded
    triviality flag and that (Q, R) generate E(K)/ell.  Good degree-1
    places contribute the local dimension from the reduced group order;
    bad places must pass the vanishing proxy and contribute 0.
    """
    if not instance.sha_assumption:
        raise AssumptionViolated("instance built without the triviality flag")
    ell = instance.ell
    columns_dim = 0
    rows_q: list[int] = []
    rows_r: list[int] = []
    disc = abs(instance.lifted_curve.discriminant())
    for place in [instance.place_u, instance.place_u_conj, *extra_places]:
        if place.degree != 1:
            raise BadInput("only degree-1 places are supported")
        if disc % place.q == 0:
            if not _bad_place_proxy_ok(instance, place):
                raise AssumptionViolated(
                    f"bad place {place} fails the local-vanishing proxy")
            continue  # contributes the zero group
        if place.q == ell:
            local_dim = 1 if instance.d_ell % ell else 0
        elif place.q == instance.p:
            local_dim = 1  # reduced order is exactly ell
        else:
            order = ec_group_order(instance.lifted_curve.reduction(place.q))
            local_dim = 1 if order % ell == 0 else 0
            if order % (ell * ell) == 0:
                raise BadInput(f"ell^2 divides the reduced order at {place}")
        if local_dim == 0:
            continue
        columns_dim += 1
        rows_q.append(_local_coordinates(instance, instance.Q, place))
        rows_r.append(_local_coordinates(instance, instance.R, place))
    if columns_dim == 0:
        return 0
    rank = _matrix_rank_mod([rows_q, rows_r], ell)
    return columns_dim - rank


def scan_torsion_places(curve: Curve, K: RealQuadField, ell: int,
                        bound: int) -> list[tuple[Place, int]]:
    """Degree-1 good-reduction places w of norm <= bound, away from ell,
    where ell divides the reduced group order.

    Empty whenever bound < (sqrt(ell)-1)^2: the Hasse interval keeps
    ell-torsion away from small residue fields.
    """
    from .arith import primes_up_to

    if not isinstance(curve.a, int) or not isinstance(curve.b, int):
        raise BadInput("scanning needs an integral model")
    disc = abs(curve.discriminant())
    hits: list[tuple[Place, int]] = []
    for q in primes_up_to(bound):
        if q == 2 or q == ell or disc % q == 0:
            continue
        degree_one = [w for w in split_places(q, K) if w.degree == 1 and w.norm <= bound]
        if not degree_one:
            continue
        order = ec_group_order(curve.reduction(q))
        if order % ell == 0:
            hits.extend((w, order) for w in degree_one)
    return hits


# ---------------------------------------------------------------------------
# serialization


def ec_instance_to_json(instance: EcSignatureInstance) -> str:
    """Canonical JSON; numbers as decimal strings, flag as a boolean."""
    doc = {
        "p": str(instance.p),
        "ell": str(instance.ell),
        "a": str(instance.a),
        "b_r": str(instance.b_r),
        "Q": [str(instance.Q.x), str(instance.Q.y)],
        "D": str(instance.K.D),
        "R": [[str(instance.R.x.a), str(instance.R.x.b)],
              [str(instance.R.y.a), str(instance.R.y.b)]],
        "v_root_label": str(instance.place_v.root_label),
        "u_root_label": str(instance.place_u.root_label),
        "seed": str(instance.seed),
        "sha_assumption": instance.sha_assumption,
    }
    return json.dumps(doc, sort_keys=True, separators=(", ", ": ")) + "\n"


def ec_instance_from_json(text: str) -> EcSignatureInstance:
    doc = json.loads(text)
    p, ell = int(doc["p"]), int(doc["ell"])
    a, b_r = int(doc["a"]), int(doc["b_r"])
    K = RealQuadField(int(doc["D"]))
    Q = Point(int(doc["Q"][0]), int(doc["Q"][1]))
    R = Point(K.element(int(doc["R"][0][0]), int(doc["R"][0][1])),
              K.element(int(doc["R"][1][0]), int(doc["R"][1][1])))
    u_places = split_places(ell, K)
    v_places = split_places(p, K)
    try:
        ui = [w.root_label for w in u_places].index(int(doc["u_root_label"]))
        vi = [w.root_label for w in v_places].index(int(doc["v_root_label"]))
    except ValueError:
        raise BadInput("root labels do not match the field's places") from None
    E = Curve(a, b_r, ("rational",))
    d_ell = ec_group_order(E.reduction(ell))
    Qt = _reduce_point(Q, v_places[vi], p)
    Rt = _reduce_point(R, v_places[vi], p)
    cQ = local_class(Q, E, ell).c
    cR_u = local_class(R, E, ell, place=u_places[ui]).c
    cR_uc = local_class(R, E, ell, place=u_places[1 - ui]).c
    return EcSignatureInstance(
        p=p, ell=ell, base_a=a % p, base_b=b_r % p, Qt=Qt, Rt=Rt,
        a=a, b_r=b_r, Q=Q, R=R, K=K,
        place_u=u_places[ui], place_u_conj=u_places[1 - ui],
        place_v=v_places[vi], place_v_conj=v_places[1 - vi],
        d_ell=d_ell, certificate=((cQ, cQ), (cR_u, cR_uc)),
        seed=int(doc["seed"]), sha_assumption=bool(doc["sha_assumption"]),
    )
