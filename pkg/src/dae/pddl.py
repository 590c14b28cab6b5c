"""Typed PDDL 2.1 subset: tokenizer, parser and canonical unparser.

Supported domain sections: :requirements, :types, :predicates, :functions
(static lookups usable only in duration expressions) and :durative-action
with a single duration expression, conjunctive start/end/overall conditions
and conjunctive add/delete effects. Everything else raises UnsupportedFeature.
The temporal annotations (at start / over all / at end) are parsed and then
flattened: an operator is a plain (pre, add, del, duration) tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParseError, UnknownSymbol, UnsupportedFeature

_KNOWN_REQUIREMENTS = {":strips", ":typing", ":durative-actions"}


@dataclass(frozen=True)
class Token:
    value: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Split s-expression text into tokens, dropping ; comments."""
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(Token(ch, line, col))
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
                col += 1
            tokens.append(Token(text[start:i], line, start_col))
    return tokens


def _read_sexpr(tokens: list[Token], pos: int):
    """Return (tree, next_pos); tree is a Token or a list of trees."""
    if pos >= len(tokens):
        raise ParseError("unexpected end of input")
    tok = tokens[pos]
    if tok.value == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise ParseError("unbalanced parenthesis", tok.line, tok.column)
            if tokens[pos].value == ")":
                return items, pos + 1
            item, pos = _read_sexpr(tokens, pos)
            items.append(item)
    if tok.value == ")":
        raise ParseError("unexpected ')'", tok.line, tok.column)
    return tok, pos + 1


def parse_sexprs(text: str) -> list:
    """Parse all top-level s-expressions in a string."""
    tokens = tokenize(text)
    trees = []
    pos = 0
    while pos < len(tokens):
        tree, pos = _read_sexpr(tokens, pos)
        trees.append(tree)
    return trees


# --- model types -----------------------------------------------------------

TypeRef = frozenset  # frozenset[str]: singleton for a plain type, larger for (either ...)


@dataclass(frozen=True)
class Atom:
    """Predicate application; args may contain ?variables in operator bodies."""

    pred: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return "(" + " ".join((self.pred,) + self.args) + ")"


@dataclass(frozen=True)
class Duration:
    """Constant rational, or a static function lookup over parameter variables."""

    const: Fraction | None = None
    fn: str | None = None
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class Operator:
    name: str
    params: tuple[tuple[str, TypeRef], ...]
    duration: Duration
    pre: tuple[Atom, ...]
    add: tuple[Atom, ...]
    dels: tuple[Atom, ...]


@dataclass(frozen=True)
class DomainModel:
    name: str
    requirements: tuple[str, ...]
    types: tuple[tuple[str, str], ...]  # (type, parent) pairs; parent chain roots at "object"
    predicates: tuple[tuple[str, tuple[tuple[str, TypeRef], ...]], ...]
    functions: tuple[tuple[str, tuple[tuple[str, TypeRef], ...]], ...]
    operators: tuple[Operator, ...]

    def predicate_map(self) -> dict[str, tuple[tuple[str, TypeRef], ...]]:
        return dict(self.predicates)

    def type_parents(self) -> dict[str, str]:
        return dict(self.types)


@dataclass(frozen=True)
class ProblemModel:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]  # (object, type)
    init: tuple[Atom, ...]
    durations: tuple[tuple[str, tuple[str, ...], Fraction], ...]  # static function bindings
    goal: tuple[Atom, ...]

    def object_map(self) -> dict[str, str]:
        return dict(self.objects)


# --- parsing helpers -------------------------------------------------------


def _sym(tree, what: str) -> Token:
    if not isinstance(tree, Token):
        raise ParseError(f"expected {what}, got a list")
    return tree


def _is_number(s: str) -> bool:
    try:
        Fraction(s)
        return True
    except ValueError:
        return False


def _parse_typed_list(items: list, *, known_types: set[str], what: str) -> list[tuple[str, TypeRef]]:
    """Parse `name+ - type` groups; every name must receive a type."""
    out: list[tuple[str, TypeRef]] = []
    pending: list[Token] = []
    i = 0
    while i < len(items):
        item = items[i]
        if isinstance(item, Token) and item.value == "-":
            if not pending:
                raise ParseError("dangling '-' in typed list", item.line, item.column)
            if i + 1 >= len(items):
                raise ParseError("missing type after '-'", item.line, item.column)
            tref = _parse_type_ref(items[i + 1], known_types)
            for name in pending:
                out.append((name.value, tref))
            pending = []
            i += 2
        else:
            pending.append(_sym(item, what))
            i += 1
    if pending:
        tok = pending[0]
        raise UnsupportedFeature(f"untyped {what} '{tok.value}'", tok.line, tok.column)
    return out


def _parse_type_ref(tree, known_types: set[str]) -> TypeRef:
    if isinstance(tree, Token):
        if tree.value not in known_types:
            raise UnknownSymbol(f"unknown type '{tree.value}'", tree.line, tree.column)
        return frozenset([tree.value])
    if tree and isinstance(tree[0], Token) and tree[0].value == "either":
        names = []
        for t in tree[1:]:
            tok = _sym(t, "type name")
            if tok.value not in known_types:
                raise UnknownSymbol(f"unknown type '{tok.value}'", tok.line, tok.column)
            names.append(tok.value)
        if not names:
            raise ParseError("(either) with no types", tree[0].line, tree[0].column)
        return frozenset(names)
    raise UnsupportedFeature("unsupported type expression")


def _parse_atom(tree, predicates: dict[str, tuple], *, allow_vars: bool) -> Atom:
    if isinstance(tree, Token) or not tree:
        raise ParseError("expected an atom")
    head = _sym(tree[0], "predicate name")
    if head.value not in predicates:
        raise UnknownSymbol(f"unknown predicate '{head.value}'", head.line, head.column)
    args = []
    for a in tree[1:]:
        tok = _sym(a, "atom argument")
        if tok.value.startswith("?") and not allow_vars:
            raise ParseError(f"variable '{tok.value}' in ground atom", tok.line, tok.column)
        args.append(tok.value)
    if len(args) != len(predicates[head.value]):
        raise ParseError(
            f"predicate '{head.value}' expects {len(predicates[head.value])} arguments, got {len(args)}",
            head.line,
            head.column,
        )
    return Atom(head.value, tuple(args))


def _strip_time_wrapper(tree):
    """Remove an (at start X) / (at end X) / (over all X) wrapper if present."""
    if (
        isinstance(tree, list)
        and len(tree) == 3
        and isinstance(tree[0], Token)
        and isinstance(tree[1], Token)
        and (
            (tree[0].value == "at" and tree[1].value in ("start", "end"))
            or (tree[0].value == "over" and tree[1].value == "all")
        )
    ):
        return tree[2]
    return tree


def _conjuncts(tree) -> list:
    if isinstance(tree, list) and tree and isinstance(tree[0], Token) and tree[0].value == "and":
        return tree[1:]
    return [tree]


def _parse_duration(tree, params: dict[str, TypeRef], functions: dict[str, tuple]) -> Duration:
    # expected shape: (= ?duration <rational>) or (= ?duration (fn ?v...))
    if (
        not isinstance(tree, list)
        or len(tree) != 3
        or not isinstance(tree[0], Token)
        or tree[0].value != "="
        or not isinstance(tree[1], Token)
        or tree[1].value != "?duration"
    ):
        raise UnsupportedFeature("duration must have the form (= ?duration <value>)")
    rhs = tree[2]
    if isinstance(rhs, Token):
        if not _is_number(rhs.value):
            raise UnsupportedFeature(f"non-numeric duration '{rhs.value}'", rhs.line, rhs.column)
        value = Fraction(rhs.value)
        if value < 0:
            raise ParseError("negative duration", rhs.line, rhs.column)
        return Duration(const=value)
    if not rhs or not isinstance(rhs[0], Token):
        raise UnsupportedFeature("unsupported duration expression")
    fn = rhs[0]
    if fn.value not in functions:
        raise UnknownSymbol(f"unknown function '{fn.value}'", fn.line, fn.column)
    args = []
    for a in rhs[1:]:
        tok = _sym(a, "duration argument")
        if not tok.value.startswith("?") or tok.value not in params:
            raise UnknownSymbol(f"duration argument '{tok.value}' is not a parameter", tok.line, tok.column)
        args.append(tok.value)
    if len(args) != len(functions[fn.value]):
        raise ParseError(f"function '{fn.value}' expects {len(functions[fn.value])} arguments", fn.line, fn.column)
    return Duration(fn=fn.value, args=tuple(args))


def _parse_operator(items: list, known_types: set[str], predicates: dict, functions: dict) -> Operator:
    name = _sym(items[0], "action name").value
    sections: dict[str, object] = {}
    i = 1
    while i < len(items):
        key = _sym(items[i], "section keyword")
        if not key.value.startswith(":"):
            raise ParseError(f"expected a section keyword, got '{key.value}'", key.line, key.column)
        if i + 1 >= len(items):
            raise ParseError(f"missing value for {key.value}", key.line, key.column)
        sections[key.value] = items[i + 1]
        i += 2
    for required in (":parameters", ":duration", ":condition", ":effect"):
        if required not in sections:
            raise ParseError(f"durative action '{name}' lacks {required}")
    unknown = set(sections) - {":parameters", ":duration", ":condition", ":effect"}
    if unknown:
        raise UnsupportedFeature(f"unsupported action section {sorted(unknown)[0]} in '{name}'")

    params = _parse_typed_list(sections[":parameters"], known_types=known_types, what="parameter")
    seen_vars = set()
    for var, _ in params:
        if not var.startswith("?"):
            raise ParseError(f"parameter '{var}' of '{name}' must start with '?'")
        if var in seen_vars:
            raise ParseError(f"duplicate parameter '{var}' in '{name}'")
        seen_vars.add(var)
    param_map = dict(params)

    duration = _parse_duration(sections[":duration"], param_map, functions)

    def check_vars(atom: Atom) -> Atom:
        for a in atom.args:
            if a.startswith("?") and a not in param_map:
                raise UnknownSymbol(f"unbound variable '{a}' in '{name}'")
            if not a.startswith("?"):
                raise UnsupportedFeature(f"constant '{a}' in operator body of '{name}' not supported")
        return atom

    pre: list[Atom] = []
    for c in _conjuncts(sections[":condition"]):
        c = _strip_time_wrapper(c)
        if isinstance(c, list) and c and isinstance(c[0], Token) and c[0].value == "not":
            raise UnsupportedFeature(f"negative condition in '{name}'", c[0].line, c[0].column)
        pre.append(check_vars(_parse_atom(c, predicates, allow_vars=True)))

    add: list[Atom] = []
    dels: list[Atom] = []
    for e in _conjuncts(sections[":effect"]):
        e = _strip_time_wrapper(e)
        if isinstance(e, list) and e and isinstance(e[0], Token) and e[0].value == "when":
            raise UnsupportedFeature(f"conditional effect in '{name}'", e[0].line, e[0].column)
        if isinstance(e, list) and e and isinstance(e[0], Token) and e[0].value == "not":
            if len(e) != 2:
                raise ParseError(f"malformed (not ...) effect in '{name}'", e[0].line, e[0].column)
            dels.append(check_vars(_parse_atom(e[1], predicates, allow_vars=True)))
        else:
            add.append(check_vars(_parse_atom(e, predicates, allow_vars=True)))

    return Operator(name, tuple(params), duration, tuple(pre), tuple(add), tuple(dels))


def parse_domain(text: str) -> DomainModel:
    """Parse a domain file into a DomainModel; raises on anything outside the subset."""
    trees = parse_sexprs(text)
    if len(trees) != 1 or isinstance(trees[0], Token):
        raise ParseError("expected a single (define (domain ...)) form")
    tree = trees[0]
    if (
        len(tree) < 2
        or not isinstance(tree[0], Token)
        or tree[0].value != "define"
        or isinstance(tree[1], Token)
        or len(tree[1]) != 2
        or _sym(tree[1][0], "keyword").value != "domain"
    ):
        raise ParseError("expected (define (domain <name>) ...)")
    name = _sym(tree[1][1], "domain name").value

    requirements: list[str] = []
    types: list[tuple[str, str]] = []
    predicates: list[tuple[str, tuple]] = []
    functions: list[tuple[str, tuple]] = []
    operators: list[Operator] = []
    known_types: set[str] = {"object"}
    pred_map: dict[str, tuple] = {}
    fn_map: dict[str, tuple] = {}

    for section in tree[2:]:
        if isinstance(section, Token) or not section:
            raise ParseError("malformed domain section")
        head = _sym(section[0], "section keyword")
        if head.value == ":requirements":
            for r in section[1:]:
                tok = _sym(r, "requirement")
                if tok.value not in _KNOWN_REQUIREMENTS:
                    raise UnsupportedFeature(f"requirement '{tok.value}'", tok.line, tok.column)
                requirements.append(tok.value)
        elif head.value == ":types":
            # same `name+ - parent` grouping as parameters, parent defaults to object
            pending: list[Token] = []
            i = 1
            while i < len(section):
                item = section[i]
                if isinstance(item, Token) and item.value == "-":
                    if i + 1 >= len(section):
                        raise ParseError("missing type after '-'", item.line, item.column)
                    parent = _sym(section[i + 1], "type name")
                    if parent.value not in known_types:
                        raise UnknownSymbol(f"unknown parent type '{parent.value}'", parent.line, parent.column)
                    for t in pending:
                        types.append((t.value, parent.value))
                        known_types.add(t.value)
                    pending = []
                    i += 2
                else:
                    pending.append(_sym(item, "type name"))
                    i += 1
            for t in pending:
                types.append((t.value, "object"))
                known_types.add(t.value)
        elif head.value == ":predicates":
            for p in section[1:]:
                if isinstance(p, Token) or not p:
                    raise ParseError("malformed predicate declaration")
                pname = _sym(p[0], "predicate name").value
                params = tuple(_parse_typed_list(p[1:], known_types=known_types, what="predicate parameter"))
                if pname in pred_map:
                    raise ParseError(f"duplicate predicate '{pname}'")
                predicates.append((pname, params))
                pred_map[pname] = params
        elif head.value == ":functions":
            for f in section[1:]:
                if isinstance(f, Token) or not f:
                    raise ParseError("malformed function declaration")
                fname = _sym(f[0], "function name").value
                params = tuple(_parse_typed_list(f[1:], known_types=known_types, what="function parameter"))
                if fname in fn_map:
                    raise ParseError(f"duplicate function '{fname}'")
                functions.append((fname, params))
                fn_map[fname] = params
        elif head.value == ":durative-action":
            operators.append(_parse_operator(section[1:], known_types, pred_map, fn_map))
        elif head.value == ":action":
            raise UnsupportedFeature("instantaneous :action not supported, use :durative-action", head.line, head.column)
        else:
            raise UnsupportedFeature(f"domain section '{head.value}'", head.line, head.column)

    names = [op.name for op in operators]
    if len(names) != len(set(names)):
        raise ParseError("duplicate action name")
    return DomainModel(name, tuple(requirements), tuple(types), tuple(predicates), tuple(functions), tuple(operators))


def parse_problem(text: str, domain: DomainModel) -> ProblemModel:
    """Parse a problem file against its domain; validates symbols, types and arities."""
    trees = parse_sexprs(text)
    if len(trees) != 1 or isinstance(trees[0], Token):
        raise ParseError("expected a single (define (problem ...)) form")
    tree = trees[0]
    if (
        len(tree) < 2
        or not isinstance(tree[0], Token)
        or tree[0].value != "define"
        or isinstance(tree[1], Token)
        or len(tree[1]) != 2
        or _sym(tree[1][0], "keyword").value != "problem"
    ):
        raise ParseError("expected (define (problem <name>) ...)")
    name = _sym(tree[1][1], "problem name").value

    known_types = {"object"} | {t for t, _ in domain.types}
    pred_map = domain.predicate_map()
    fn_map = dict(domain.functions)
    parents = domain.type_parents()

    domain_name = ""
    objects: list[tuple[str, str]] = []
    init: list[Atom] = []
    durations: list[tuple[str, tuple[str, ...], Fraction]] = []
    goal: list[Atom] = []
    obj_map: dict[str, str] = {}

    def check_ground_atom(atom_tree) -> Atom:
        atom = _parse_atom(atom_tree, pred_map, allow_vars=False)
        for arg, (_, tref) in zip(atom.args, pred_map[atom.pred]):
            if arg not in obj_map:
                raise UnknownSymbol(f"unknown object '{arg}'")
            if not _object_matches(obj_map[arg], tref, parents):
                raise ParseError(f"object '{arg}' has type '{obj_map[arg]}', incompatible with {str(atom)}")
        return atom

    for section in tree[2:]:
        if isinstance(section, Token) or not section:
            raise ParseError("malformed problem section")
        head = _sym(section[0], "section keyword")
        if head.value == ":domain":
            domain_name = _sym(section[1], "domain name").value
            if domain_name != domain.name:
                raise ParseError(f"problem names domain '{domain_name}', parsed domain is '{domain.name}'")
        elif head.value == ":objects":
            for obj, tname in _parse_typed_list(section[1:], known_types=known_types, what="object"):
                (single,) = tname if len(tname) == 1 else (None,)
                if single is None:
                    raise UnsupportedFeature("(either ...) types not allowed in object declarations")
                if obj in obj_map:
                    raise ParseError(f"duplicate object '{obj}'")
                objects.append((obj, single))
                obj_map[obj] = single
        elif head.value == ":init":
            for entry in section[1:]:
                if isinstance(entry, list) and entry and isinstance(entry[0], Token) and entry[0].value == "=":
                    if len(entry) != 3 or isinstance(entry[1], Token) or not isinstance(entry[2], Token):
                        raise UnsupportedFeature("only (= (<fn> <objs>) <rational>) assignments supported in :init")
                    fn_tok = _sym(entry[1][0], "function name")
                    if fn_tok.value not in fn_map:
                        raise UnknownSymbol(f"unknown function '{fn_tok.value}'", fn_tok.line, fn_tok.column)
                    args = tuple(_sym(a, "function argument").value for a in entry[1][1:])
                    if len(args) != len(fn_map[fn_tok.value]):
                        raise ParseError(f"function '{fn_tok.value}' expects {len(fn_map[fn_tok.value])} arguments")
                    for arg, (_, tref) in zip(args, fn_map[fn_tok.value]):
                        if arg not in obj_map:
                            raise UnknownSymbol(f"unknown object '{arg}'")
                        if not _object_matches(obj_map[arg], tref, parents):
                            raise ParseError(f"object '{arg}' incompatible with function '{fn_tok.value}'")
                    if not _is_number(entry[2].value):
                        raise ParseError(f"non-numeric binding for '{fn_tok.value}'", entry[2].line, entry[2].column)
                    value = Fraction(entry[2].value)
                    if value < 0:
                        raise ParseError("negative duration binding", entry[2].line, entry[2].column)
                    durations.append((fn_tok.value, args, value))
                else:
                    init.append(check_ground_atom(entry))
        elif head.value == ":goal":
            for g in _conjuncts(section[1]):
                goal.append(check_ground_atom(g))
        else:
            raise UnsupportedFeature(f"problem section '{head.value}'", head.line, head.column)

    return ProblemModel(name, domain_name, tuple(objects), tuple(init), tuple(durations), tuple(goal))


def _object_matches(obj_type: str, tref: TypeRef, parents: dict[str, str]) -> bool:
    for target in tref:
        t = obj_type
        seen = set()
        while t not in seen:
            if t == target:
                return True
            if t == "object":
                break
            seen.add(t)
            t = parents.get(t, "object")
    return False


# --- unparsing -------------------------------------------------------------


def _fmt_type(tref: TypeRef) -> str:
    if len(tref) == 1:
        return next(iter(tref))
    return "(either " + " ".join(sorted(tref)) + ")"


def _fmt_params(params) -> str:
    return " ".join(f"{v} - {_fmt_type(t)}" for v, t in params)


def _fmt_atom(atom: Atom) -> str:
    return "(" + " ".join((atom.pred,) + atom.args) + ")"


def unparse_domain(domain: DomainModel) -> str:
    out = [f"(define (domain {domain.name})"]
    if domain.requirements:
        out.append("  (:requirements " + " ".join(domain.requirements) + ")")
    if domain.types:
        out.append("  (:types " + " ".join(f"{t} - {p}" for t, p in domain.types) + ")")
    if domain.predicates:
        decls = " ".join(f"({n} {_fmt_params(ps)})" if ps else f"({n})" for n, ps in domain.predicates)
        out.append("  (:predicates " + decls + ")")
    if domain.functions:
        decls = " ".join(f"({n} {_fmt_params(ps)})" if ps else f"({n})" for n, ps in domain.functions)
        out.append("  (:functions " + decls + ")")
    for op in domain.operators:
        out.append(f"  (:durative-action {op.name}")
        out.append(f"   :parameters ({_fmt_params(op.params)})")
        if op.duration.const is not None:
            out.append(f"   :duration (= ?duration {op.duration.const})")
        else:
            out.append(f"   :duration (= ?duration ({op.duration.fn} " + " ".join(op.duration.args) + "))")
        conds = " ".join(f"(at start {_fmt_atom(a)})" for a in op.pre)
        out.append(f"   :condition (and {conds})")
        effs = [f"(at start (not {_fmt_atom(a)}))" for a in op.dels]
        effs += [f"(at end {_fmt_atom(a)})" for a in op.add]
        out.append(f"   :effect (and {' '.join(effs)}))")
    out.append(")")
    return "\n".join(out) + "\n"


def unparse_problem(problem: ProblemModel) -> str:
    out = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    if problem.objects:
        out.append("  (:objects " + " ".join(f"{o} - {t}" for o, t in problem.objects) + ")")
    entries = [_fmt_atom(a) for a in problem.init]
    entries += [f"(= ({fn} {' '.join(args)}) {value})" for fn, args, value in problem.durations]
    out.append("  (:init " + " ".join(entries) + ")")
    out.append("  (:goal (and " + " ".join(_fmt_atom(a) for a in problem.goal) + "))")
    out.append(")")
    return "\n".join(out) + "\n"
