"""qiitc: a compiler-style toolkit for quotient inductive-inductive signatures.

Parse and validate signatures, stage them into their semantic ladder, derive
elimination principles, build depth-bounded initial algebras by term
enumeration plus congruence closure, and check the categorical laws
(homomorphisms, folds, sections, products, equalisers, family limits) on
finite instances.
"""

from .algebra import (
    FiniteAlgebra,
    Homomorphism,
    Violation,
    algebra_from_doc,
    algebra_to_doc,
    check_homomorphism,
    enumerate_homs,
    equaliser,
    equaliser_is_whole_model,
    fold,
    product,
    uniqueness_check,
    verify_algebra,
)
from .diagnostics import Diagnostic, Span
from .elaborate import ConstructorSemantics, SortLadder, derived_externals, elaborate
from .eliminator import EliminatorSpec, derive_eliminator, render_eliminator
from .families import FamilyDiagram, FamilyMap, IndexedFamily, family_limit
from .fibred import (
    FibredAlgebra,
    Section,
    constant_unit_fibred,
    fibred_from_hom,
    find_section,
    total_algebra,
    verify_fibred,
)
from .model import BudgetExceededError, TermModel, build_model, model_stats
from .parser import (
    SourceFile,
    parse_closed_term,
    parse_signature,
    print_signature,
)
from .signature import (
    Apply,
    Atom,
    ExternalSet,
    FnApp,
    FnLit,
    PathDecl,
    PointDecl,
    Signature,
    SortDecl,
    Var,
    scope_of,
    validate,
)

__version__ = "0.1.0"
