"""Regenerate rdkit_atoms.json: per-atom descriptors from RDKit for a
fixed list of SMILES. Run with `python3 gen_rdkit_atoms.py`."""
import json
from rdkit import Chem

SMILES = [
    "C", "CC", "c1ccccc1", "CCO", "CC(=O)O", "CC(=O)Oc1ccccc1C(=O)O",
    "C#N", "C=C", "CC#CC", "c1ccncc1", "c1ccoc1", "c1cc[nH]c1",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C", "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "COc1ccc2[nH]cc(CCN)c2c1", "CC(=O)Nc1ccc(O)cc1", "ClC(Cl)Cl",
    "FC(F)(F)c1ccccc1", "OS(=O)(=O)O", "C[N+](C)(C)C", "[O-]C=O",
    "NC(=O)N", "C1CC1", "C1CCCCC1", "Brc1ccccc1I", "CCS", "CSC",
    "[Na+].[Cl-]", "O=C=O", "CC(N)C(=O)O",
]

HYB = {
    Chem.HybridizationType.SP: "sp",
    Chem.HybridizationType.SP2: "sp2",
    Chem.HybridizationType.SP3: "sp3",
    Chem.HybridizationType.SP3D: "sp3d",
    Chem.HybridizationType.SP3D2: "sp3d2",
}

out = []
for smi in SMILES:
    mol = Chem.MolFromSmiles(smi)
    atoms = []
    for a in mol.GetAtoms():
        atoms.append({
            "symbol": a.GetSymbol(),
            "degree": a.GetDegree(),
            "implicit_valence": a.GetNumImplicitHs(),
            "formal_charge": a.GetFormalCharge(),
            "radical_electrons": a.GetNumRadicalElectrons(),
            "hybridization": HYB.get(a.GetHybridization()),
            "aromatic": a.GetIsAromatic(),
            "total_hydrogens": a.GetTotalNumHs(),
        })
    bonds = sorted(tuple(sorted((b.GetBeginAtomIdx(), b.GetEndAtomIdx()))) for b in mol.GetBonds())
    out.append({"smiles": smi, "atoms": atoms, "bonds": bonds})

with open(__file__.replace("gen_rdkit_atoms.py", "rdkit_atoms.json"), "w") as f:
    json.dump(out, f, indent=1)
