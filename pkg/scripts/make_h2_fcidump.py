"""Regenerate tests/data/h2_sto6g.fcidump (requires pyscf, not a package dependency).

H2 at 0.75 Angstrom in STO-6G with canonical RHF orbitals. The bond length is
converted with the older 0.529177249 Angstrom/bohr constant used by GAMESS.
"""
import sys

from pyscf import gto, scf
from pyscf.tools import fcidump

BOHR = 0.529177249

mol = gto.M(atom=f"H 0 0 0; H 0 0 {0.75 / BOHR!r}", basis="sto-6g", unit="Bohr", verbose=0)
mf = scf.RHF(mol)
mf.conv_tol = 1e-14
mf.kernel()
out = sys.argv[1] if len(sys.argv) > 1 else "tests/data/h2_sto6g.fcidump"
fcidump.from_scf(mf, out, tol=1e-15, float_format="%.17g")
print(f"E(RHF) = {mf.e_tot:.12f}")
