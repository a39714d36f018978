"""Tour of the three base fields: exact constants, units, torsion."""

from hilbert_selberg.quadfield import make_field
from hilbert_selberg.zetafun import ruelle_leading

for D in (5, 8, 12):
    F = make_field(D)
    print(f"Q(sqrt({D}))")
    print(f"  fundamental unit      {F.eps}  ->  {F.eps1:.12f}")
    print(f"  regulator             {F.regulator:.12f}")
    print(f"  zeta_K(-1)            {F.zeta_minus_one}")
    print(f"  Euler characteristic  {F.euler_char}")
    census = ", ".join(f"(nu={nu}, t={t}) x{c}"
                       for nu, t, c in F.elliptic_census)
    print(f"  elliptic classes      {census}")
    info = ruelle_leading(F)
    print(f"  ratio zeta at s=0     zero of order {info['n0']}, "
          f"|leading| = {info['abs_leading']:.9f}")
    print()
