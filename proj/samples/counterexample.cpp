// Copyright 2026 The qcompat Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Two qubit observables whose binarizations are pairwise jointly measurable
// although the observables themselves share no mother observable.

#include <iostream>

#include <qcompat/compatibility.hpp>
#include <qcompat/fixtures.hpp>

int main() {
    using namespace qcompat;
    const auto e = fixtures::E();
    const auto f = fixtures::F();

    std::cout << "max eigenvalue of E1+E2+F1: " << max_eigenvalue(e.effect(0) + e.effect(1) + f.effect(0)) << '\n';

    const auto bins = binarization_jm_all(e, f);
    std::cout << "binarizations jointly measurable: " << to_string(bins.status) << " (" << bins.witnesses.size()
              << " pairs)\n";

    const auto co = coexistence_check(e, f);
    std::cout << "coexistent: " << to_string(co.status) << '\n';
    if (co.status == Status::No)
        std::cout << "  " << co.violated_condition << ", max eigenvalue " << *co.condition_value << '\n';

    const auto jm = jm_check(e, f);
    std::cout << "jointly measurable: " << to_string(jm.status) << '\n';
    return 0;
}
