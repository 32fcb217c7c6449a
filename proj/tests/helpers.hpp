// Copyright 2026 The fjsplb Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "fjsplb/instance.hpp"

namespace testing_support {

// Op given as (part_sorting, {(machine, time)...}).
struct OpSpec {
    bool part_sorting = false;
    std::vector<fjsplb::MachineOption> machines;
};

struct JobSpec {
    std::vector<OpSpec> ops;
    std::vector<fjsplb::PartCount> parts;
};

inline fjsplb::Instance make_instance(int machines, std::vector<int> ps_machines, int categories, int pallets,
                                      fjsplb::Time place, fjsplb::Time sw, const std::vector<JobSpec> &jobs) {
    fjsplb::Instance inst;
    inst.machine_count = machines;
    inst.part_sorting_machines = std::move(ps_machines);
    inst.category_count = categories;
    inst.pallet_count = pallets;
    inst.place_time = place;
    inst.switch_time = sw;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        fjsplb::Job job;
        job.parts = jobs[j].parts;
        for (std::size_t k = 0; k < jobs[j].ops.size(); ++k)
            job.operations.push_back({static_cast<int>(j), static_cast<int>(k), jobs[j].ops[k].machines,
                                      jobs[j].ops[k].part_sorting});
        inst.jobs.push_back(std::move(job));
    }
    return inst;
}

} // namespace testing_support
