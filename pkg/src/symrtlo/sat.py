"""A small CDCL satisfiability solver.

Complete search with two-watched-literal propagation, first-UIP clause
learning, activity-based branching (VSIDS-style), phase saving and
geometric restarts. Entirely deterministic: ties break toward the lowest
variable index. Intended for desk-scale circuit miters, not industrial
instances.
"""

from __future__ import annotations


class Solver:
    def __init__(self):
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.assign: list[int] = [0]  # 1-indexed: 0 unassigned, +1 true, -1 false
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]  # clause index or -1
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.activity: list[float] = [0.0]
        self.phase: list[int] = [0]
        self.var_inc = 1.0
        self.ok = True

    # -- construction ---------------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        self.assign.append(0)
        self.level.append(0)
        self.reason.append(-1)
        self.activity.append(0.0)
        self.phase.append(-1)
        return self.nvars

    def add_clause(self, lits) -> bool:
        if not self.ok:
            return False
        seen = set()
        clause = []
        for lit in lits:
            if -lit in seen:
                return True  # tautology
            if lit in seen:
                continue
            v = self.value(lit)
            if v == 1 and self.level[abs(lit)] == 0:
                return True  # already satisfied at root
            if v == -1 and self.level[abs(lit)] == 0:
                continue  # falsified at root: drop literal
            seen.add(lit)
            clause.append(lit)
        if not clause:
            self.ok = False
            return False
        if len(clause) == 1:
            if not self._enqueue(clause[0], -1):
                self.ok = False
                return False
            conflict = self._propagate()
            if conflict != -1:
                self.ok = False
                return False
            return True
        idx = len(self.clauses)
        self.clauses.append(clause)
        self.watches.setdefault(clause[0], []).append(idx)
        self.watches.setdefault(clause[1], []).append(idx)
        return True

    # -- state ------------------------------------------------------------

    def value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        return v if lit > 0 else -v

    def model_value(self, var: int) -> bool:
        return self.assign[var] == 1

    def _enqueue(self, lit: int, reason: int) -> bool:
        v = self.value(lit)
        if v == 1:
            return True
        if v == -1:
            return False
        var = abs(lit)
        self.assign[var] = 1 if lit > 0 else -1
        self.level[var] = len(self.trail_lim)
        self.reason[var] = reason
        self.trail.append(lit)
        return True

    def _propagate(self) -> int:
        """Unit propagation; returns conflicting clause index or -1."""
        head = getattr(self, "_qhead", 0)
        while head < len(self.trail):
            lit = self.trail[head]
            head += 1
            falsified = -lit
            watchlist = self.watches.get(falsified)
            if not watchlist:
                continue
            i = 0
            while i < len(watchlist):
                ci = watchlist[i]
                clause = self.clauses[ci]
                if clause[0] == falsified:
                    clause[0], clause[1] = clause[1], clause[0]
                # clause[1] is the falsified watch now
                first = clause[0]
                if self.value(first) == 1:
                    i += 1
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self.value(clause[k]) != -1:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches.setdefault(clause[1], []).append(ci)
                        watchlist[i] = watchlist[-1]
                        watchlist.pop()
                        moved = True
                        break
                if moved:
                    continue
                # unit or conflict
                if not self._enqueue(first, ci):
                    self._qhead = len(self.trail)
                    return ci
                i += 1
        self._qhead = head
        return -1

    # -- conflict analysis -------------------------------------------------

    def _bump(self, var: int):
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            for v in range(1, self.nvars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, conflict: int) -> tuple[list[int], int]:
        """First-UIP learning: returns (learnt clause, backtrack level)."""
        cur_level = len(self.trail_lim)
        seen = [False] * (self.nvars + 1)
        lower = []  # literals from earlier decision levels
        counter = 0
        idx = len(self.trail) - 1
        p_var = 0
        clause_lits = list(self.clauses[conflict])
        while True:
            for q in clause_lits:
                var = abs(q)
                if var == p_var or seen[var] or self.level[var] == 0:
                    continue
                seen[var] = True
                self._bump(var)
                if self.level[var] >= cur_level:
                    counter += 1
                else:
                    lower.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            p = self.trail[idx]
            p_var = abs(p)
            seen[p_var] = False
            idx -= 1
            counter -= 1
            if counter == 0:
                learnt = [-p] + lower
                break
            clause_lits = list(self.clauses[self.reason[p_var]])
        if len(learnt) > 1:
            # keep a max-level literal at slot 1 so watches stay sound
            k = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
            learnt[1], learnt[k] = learnt[k], learnt[1]
            back_level = self.level[abs(learnt[1])]
        else:
            back_level = 0
        return learnt, back_level

    def _backtrack(self, target_level: int):
        while len(self.trail_lim) > target_level:
            start = self.trail_lim.pop()
            for lit in self.trail[start:]:
                var = abs(lit)
                self.phase[var] = 1 if lit > 0 else -1
                self.assign[var] = 0
                self.reason[var] = -1
            del self.trail[start:]
        self._qhead = len(self.trail)

    def _decide(self) -> int:
        best_var = 0
        best_act = -1.0
        for v in range(1, self.nvars + 1):
            if self.assign[v] == 0 and self.activity[v] > best_act:
                best_act = self.activity[v]
                best_var = v
        if best_var == 0:
            return 0
        return best_var if self.phase[best_var] == 1 else -best_var

    def solve(self) -> bool:
        if not self.ok:
            return False
        self._qhead = 0
        if self._propagate() != -1:
            self.ok = False
            return False
        conflicts_until_restart = 128
        conflict_count = 0
        while True:
            conflict = self._propagate()
            if conflict != -1:
                if not self.trail_lim:
                    self.ok = False
                    return False
                conflict_count += 1
                self.var_inc *= 1.05
                learnt, back_level = self._analyze(conflict)
                self._backtrack(back_level)
                if len(learnt) == 1:
                    self._backtrack(0)
                    if not self._enqueue(learnt[0], -1):
                        self.ok = False
                        return False
                else:
                    idx = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches.setdefault(learnt[0], []).append(idx)
                    self.watches.setdefault(learnt[1], []).append(idx)
                    self._enqueue(learnt[0], idx)
                if conflict_count >= conflicts_until_restart:
                    conflict_count = 0
                    conflicts_until_restart = int(conflicts_until_restart * 1.5)
                    self._backtrack(0)
            else:
                lit = self._decide()
                if lit == 0:
                    return True
                self.trail_lim.append(len(self.trail))
                self._enqueue(lit, -1)
