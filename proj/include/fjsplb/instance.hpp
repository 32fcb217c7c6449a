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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fjsplb {

using Time = std::int64_t;

struct MachineOption {
    int machine = 0;
    Time time = 1;

    bool operator==(const MachineOption &) const = default;
};

struct Operation {
    int job_id = 0;
    int op_index = 0;
    std::vector<MachineOption> compatible;
    bool is_part_sorting = false;

    bool operator==(const Operation &) const = default;
};

struct PartCount {
    int category = 0;
    int count = 1;

    bool operator==(const PartCount &) const = default;
};

struct Job {
    std::vector<Operation> operations;
    std::vector<PartCount> parts;

    [[nodiscard]] int total_parts() const;
    bool operator==(const Job &) const = default;
};

/// A flexible job-shop instance with a P-pallet kitting buffer.
///
/// Parts of a job are placed onto pallets when one of its part-sorting
/// operations executes; each pallet holds a single category.
struct Instance {
    std::vector<Job> jobs;
    int machine_count = 0;
    std::vector<int> part_sorting_machines; // sorted, unique
    int category_count = 1;
    int pallet_count = 1;
    Time place_time = 0;  // per part
    Time switch_time = 0; // per pallet change

    [[nodiscard]] int operation_count() const;
    [[nodiscard]] bool is_part_sorting_machine(int machine) const;
    [[nodiscard]] bool has_part_sorting_ops() const;
    bool operator==(const Instance &) const = default;
};

struct IntRange {
    int lo = 0;
    int hi = 0;

    [[nodiscard]] bool valid() const { return lo <= hi; }
};

struct GeneratorConfig {
    int n_jobs = 10;
    int n_machines = 5;
    IntRange ops_per_job{4, 6};
    IntRange machines_per_op{1, 5};
    IntRange proc_time{1, 20};
    int part_sorting_ops_per_job = 1;
    IntRange categories_per_job{3, 5};
    IntRange parts_per_category{1, 3};
    int category_count = 10;
    int pallet_count = 6;
    Time place_time = 2;
    Time switch_time = 5;
    // -1 reserves ceil(n_machines / 5) machines for part sorting.
    int part_sorting_machines = -1;
    std::uint64_t seed = 0;

    /// Synthetic presets by size ("10x5", "20x5", "15x10", "20x10", "30x10",
    /// "40x10"); any other "NxM" gets the 10x5 row parameters with n, m set.
    static GeneratorConfig for_size(std::string_view size, std::uint64_t seed);
    [[nodiscard]] int reserved_part_sorting_machines() const;
    void validate() const; // throws ConfigError
};

struct Violation {
    std::string entity;
    std::string message;
};

[[nodiscard]] Instance generate_instance(const GeneratorConfig &config);
[[nodiscard]] std::vector<Violation> validate_instance(const Instance &inst);
void require_valid(const Instance &inst); // throws ValidationError

// Versioned JSON document ("fjsplb-instance", version 1).
[[nodiscard]] std::string save_instance(const Instance &inst);
[[nodiscard]] Instance load_instance(std::string_view text);
void write_instance_file(const std::string &path, const Instance &inst);
[[nodiscard]] Instance read_instance_file(const std::string &path);

[[nodiscard]] std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, std::string_view text);

} // namespace fjsplb
