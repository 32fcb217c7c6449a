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

#include "fjsplb/instance.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fjsplb/error.hpp"

namespace fjsplb {

using nlohmann::json;

int Job::total_parts() const {
    int total = 0;
    for (const auto &p : parts) total += p.count;
    return total;
}

int Instance::operation_count() const {
    int n = 0;
    for (const auto &j : jobs) n += static_cast<int>(j.operations.size());
    return n;
}

bool Instance::is_part_sorting_machine(int machine) const {
    return std::binary_search(part_sorting_machines.begin(), part_sorting_machines.end(), machine);
}

bool Instance::has_part_sorting_ops() const {
    for (const auto &j : jobs)
        for (const auto &o : j.operations)
            if (o.is_part_sorting) return true;
    return false;
}

namespace {

bool parse_size(std::string_view size, int &n, int &m) {
    auto x = size.find('x');
    if (x == std::string_view::npos) return false;
    auto a = size.substr(0, x), b = size.substr(x + 1);
    auto r1 = std::from_chars(a.data(), a.data() + a.size(), n);
    auto r2 = std::from_chars(b.data(), b.data() + b.size(), m);
    return r1.ec == std::errc{} && r1.ptr == a.data() + a.size() && r2.ec == std::errc{} &&
           r2.ptr == b.data() + b.size() && n > 0 && m > 0;
}

std::string range_str(const IntRange &r) {
    return "[" + std::to_string(r.lo) + "," + std::to_string(r.hi) + "]";
}

} // namespace

GeneratorConfig GeneratorConfig::for_size(std::string_view size, std::uint64_t seed) {
    int n = 0, m = 0;
    if (!parse_size(size, n, m)) throw ConfigError("bad size '" + std::string(size) + "', expected NxM");
    GeneratorConfig c;
    c.n_jobs = n;
    c.n_machines = m;
    c.seed = seed;
    if (m >= 10) {
        c.ops_per_job = {8, 12};
        c.machines_per_op = {1, 10};
    }
    return c;
}

int GeneratorConfig::reserved_part_sorting_machines() const {
    if (part_sorting_ops_per_job == 0) return 0;
    if (part_sorting_machines >= 0) return part_sorting_machines;
    return (n_machines + 4) / 5;
}

void GeneratorConfig::validate() const {
    auto fail = [](const std::string &msg) { throw ConfigError("generator config: " + msg); };
    if (n_jobs < 1) fail("n_jobs must be >= 1");
    if (n_machines < 1) fail("n_machines must be >= 1");
    for (auto [name, r] : {std::pair{"ops_per_job", ops_per_job}, {"machines_per_op", machines_per_op},
                           {"proc_time", proc_time}, {"categories_per_job", categories_per_job},
                           {"parts_per_category", parts_per_category}}) {
        if (!r.valid()) fail(std::string(name) + " range " + range_str(r) + " is empty");
    }
    if (ops_per_job.lo < 1) fail("ops_per_job must be >= 1");
    if (machines_per_op.lo < 1) fail("machines_per_op must be >= 1");
    if (proc_time.lo < 1) fail("proc_time must be >= 1");
    if (categories_per_job.lo < 0) fail("categories_per_job must be >= 0");
    if (parts_per_category.lo < 1) fail("parts_per_category must be >= 1");
    if (category_count < 1) fail("category_count must be >= 1");
    if (pallet_count < 1) fail("pallet_count must be >= 1");
    if (place_time < 0 || switch_time < 0) fail("place/switch times must be >= 0");
    if (categories_per_job.hi > std::min(category_count, pallet_count))
        fail("categories_per_job max exceeds min(C, P)");
    if (part_sorting_ops_per_job < 0) fail("part_sorting_ops_per_job must be >= 0");
    if (part_sorting_ops_per_job > ops_per_job.lo) fail("part_sorting_ops_per_job exceeds ops_per_job min");
    if (part_sorting_ops_per_job > 0 && categories_per_job.hi > 0 && reserved_part_sorting_machines() < 1)
        fail("part-sorting operations need at least one part-sorting machine");
    if (reserved_part_sorting_machines() > n_machines) fail("more part-sorting machines than machines");
}

Instance generate_instance(const GeneratorConfig &config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    auto uniform = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    Instance inst;
    inst.machine_count = config.n_machines;
    inst.category_count = config.category_count;
    inst.pallet_count = config.pallet_count;
    inst.place_time = config.place_time;
    inst.switch_time = config.switch_time;

    const int reserved = config.reserved_part_sorting_machines();
    std::vector<int> regular, sorting;
    for (int k = 0; k < config.n_machines; ++k) {
        if (k >= config.n_machines - reserved)
            sorting.push_back(k);
        else
            regular.push_back(k);
    }
    // Every machine is reserved: regular operations may use all of them.
    if (regular.empty()) regular = sorting;
    inst.part_sorting_machines = sorting;

    auto draw_machines = [&](const std::vector<int> &pool) {
        int k = std::min(uniform(config.machines_per_op.lo, config.machines_per_op.hi), static_cast<int>(pool.size()));
        std::vector<int> chosen;
        std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), k, rng);
        std::vector<MachineOption> out;
        for (int mach : chosen) out.push_back({mach, uniform(config.proc_time.lo, config.proc_time.hi)});
        return out;
    };

    std::vector<int> all_categories(config.category_count);
    std::iota(all_categories.begin(), all_categories.end(), 0);

    for (int j = 0; j < config.n_jobs; ++j) {
        Job job;
        const int n_ops = uniform(config.ops_per_job.lo, config.ops_per_job.hi);
        std::vector<int> positions(n_ops);
        std::iota(positions.begin(), positions.end(), 0);
        std::vector<int> ps_positions;
        std::sample(positions.begin(), positions.end(), std::back_inserter(ps_positions),
                    config.part_sorting_ops_per_job, rng);
        for (int i = 0; i < n_ops; ++i) {
            Operation op;
            op.job_id = j;
            op.op_index = i;
            op.is_part_sorting = std::find(ps_positions.begin(), ps_positions.end(), i) != ps_positions.end();
            op.compatible = draw_machines(op.is_part_sorting ? sorting : regular);
            job.operations.push_back(std::move(op));
        }
        const int n_cat = uniform(config.categories_per_job.lo, config.categories_per_job.hi);
        std::vector<int> cats;
        std::sample(all_categories.begin(), all_categories.end(), std::back_inserter(cats), n_cat, rng);
        for (int c : cats) job.parts.push_back({c, uniform(config.parts_per_category.lo, config.parts_per_category.hi)});
        inst.jobs.push_back(std::move(job));
    }

    auto violations = validate_instance(inst);
    if (!violations.empty())
        throw Error("internal error: generated instance is invalid: " + violations.front().entity + ": " +
                    violations.front().message);
    return inst;
}

std::vector<Violation> validate_instance(const Instance &inst) {
    std::vector<Violation> out;
    auto add = [&out](std::string entity, std::string msg) { out.push_back({std::move(entity), std::move(msg)}); };

    if (inst.machine_count < 1) add("instance", "machine count must be >= 1");
    if (inst.category_count < 1) add("instance", "category count must be >= 1");
    if (inst.pallet_count < 1) add("instance", "pallet count must be >= 1");
    if (inst.place_time < 0) add("instance", "place time must be >= 0");
    if (inst.switch_time < 0) add("instance", "switch time must be >= 0");
    if (inst.jobs.empty()) add("instance", "no jobs");
    if (!std::is_sorted(inst.part_sorting_machines.begin(), inst.part_sorting_machines.end()) ||
        std::adjacent_find(inst.part_sorting_machines.begin(), inst.part_sorting_machines.end()) !=
            inst.part_sorting_machines.end())
        add("instance", "part-sorting machine list must be sorted and unique");
    for (int k : inst.part_sorting_machines)
        if (k < 0 || k >= inst.machine_count) add("machine " + std::to_string(k), "part-sorting machine id out of range");

    const bool any_ps = inst.has_part_sorting_ops();
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        const auto &job = inst.jobs[j];
        const std::string jname = "job " + std::to_string(j);
        if (job.operations.empty()) add(jname, "has no operations");
        bool job_has_ps = false;
        for (std::size_t i = 0; i < job.operations.size(); ++i) {
            const auto &op = job.operations[i];
            const std::string oname = "operation " + std::to_string(j) + "." + std::to_string(i);
            if (op.job_id != static_cast<int>(j) || op.op_index != static_cast<int>(i))
                add(oname, "job_id/op_index do not match its position");
            if (op.compatible.empty()) add(oname, "no compatible machine");
            std::set<int> seen;
            for (const auto &opt : op.compatible) {
                if (opt.machine < 0 || opt.machine >= inst.machine_count)
                    add(oname, "machine " + std::to_string(opt.machine) + " out of range");
                if (opt.time < 1) add(oname, "processing time must be >= 1");
                if (!seen.insert(opt.machine).second)
                    add(oname, "machine " + std::to_string(opt.machine) + " listed twice");
                if (op.is_part_sorting && !inst.is_part_sorting_machine(opt.machine))
                    add(oname, "part-sorting operation on non-part-sorting machine " + std::to_string(opt.machine));
            }
            job_has_ps = job_has_ps || op.is_part_sorting;
        }
        std::set<int> cats;
        for (const auto &p : job.parts) {
            if (p.category < 0 || p.category >= inst.category_count)
                add(jname, "part category " + std::to_string(p.category) + " out of range");
            if (p.count < 1) add(jname, "part count must be >= 1");
            if (!cats.insert(p.category).second)
                add(jname, "category " + std::to_string(p.category) + " listed twice");
        }
        if (static_cast<int>(cats.size()) > inst.category_count) add(jname, "more distinct categories than C");
        if (static_cast<int>(cats.size()) > inst.pallet_count)
            add(jname, std::to_string(cats.size()) + " distinct categories exceeds pallet count " +
                           std::to_string(inst.pallet_count));
        if (any_ps && !job.parts.empty() && !job_has_ps) add(jname, "has parts but no part-sorting operation");
    }
    return out;
}

void require_valid(const Instance &inst) {
    auto v = validate_instance(inst);
    if (v.empty()) return;
    std::string msg = "invalid instance: ";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) msg += "; ";
        msg += v[i].entity + ": " + v[i].message;
    }
    throw ValidationError(msg);
}

namespace {

constexpr const char *kFormat = "fjsplb-instance";
constexpr int kVersion = 1;

const json &field(const json &obj, const char *key, const std::string &where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

template <typename T>
T number(const json &obj, const char *key, const std::string &where) {
    const json &v = field(obj, key, where);
    if (!v.is_number_integer()) throw ParseError(where + "." + key + ": expected an integer");
    return v.get<T>();
}

const json &array(const json &obj, const char *key, const std::string &where) {
    const json &v = field(obj, key, where);
    if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
    return v;
}

std::pair<int, Time> int_pair(const json &v, const std::string &where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw ParseError(where + ": expected [int, int]");
    return {v[0].get<int>(), v[1].get<Time>()};
}

} // namespace

std::string save_instance(const Instance &inst) {
    json doc;
    doc["format"] = kFormat;
    doc["version"] = kVersion;
    doc["machines"] = inst.machine_count;
    doc["part_sorting_machines"] = inst.part_sorting_machines;
    doc["categories"] = inst.category_count;
    doc["pallets"] = inst.pallet_count;
    doc["place_time"] = inst.place_time;
    doc["switch_time"] = inst.switch_time;
    json jobs = json::array();
    for (const auto &job : inst.jobs) {
        json jj;
        json parts = json::array();
        for (const auto &p : job.parts) parts.push_back({p.category, p.count});
        jj["parts"] = parts;
        json ops = json::array();
        for (const auto &op : job.operations) {
            json o;
            o["part_sorting"] = op.is_part_sorting;
            json ms = json::array();
            for (const auto &c : op.compatible) ms.push_back({c.machine, c.time});
            o["machines"] = ms;
            ops.push_back(o);
        }
        jj["operations"] = ops;
        jobs.push_back(jj);
    }
    doc["jobs"] = jobs;
    return doc.dump(1) + "\n";
}

Instance load_instance(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("instance document: parse error at byte ") + std::to_string(e.byte) + ": " +
                         e.what());
    }
    const std::string root = "instance";
    const json &fmt = field(doc, "format", root);
    if (!fmt.is_string() || fmt.get<std::string>() != kFormat)
        throw ParseError(root + ".format: expected \"" + std::string(kFormat) + "\"");
    if (number<int>(doc, "version", root) != kVersion)
        throw ParseError(root + ".version: unsupported version");

    Instance inst;
    inst.machine_count = number<int>(doc, "machines", root);
    for (const auto &v : array(doc, "part_sorting_machines", root)) {
        if (!v.is_number_integer()) throw ParseError(root + ".part_sorting_machines: expected integers");
        inst.part_sorting_machines.push_back(v.get<int>());
    }
    inst.category_count = number<int>(doc, "categories", root);
    inst.pallet_count = number<int>(doc, "pallets", root);
    inst.place_time = number<Time>(doc, "place_time", root);
    inst.switch_time = number<Time>(doc, "switch_time", root);

    const json &jobs = array(doc, "jobs", root);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const std::string jw = root + ".jobs[" + std::to_string(j) + "]";
        Job job;
        const json &parts = array(jobs[j], "parts", jw);
        for (std::size_t p = 0; p < parts.size(); ++p) {
            auto [cat, count] = int_pair(parts[p], jw + ".parts[" + std::to_string(p) + "]");
            job.parts.push_back({cat, static_cast<int>(count)});
        }
        const json &ops = array(jobs[j], "operations", jw);
        for (std::size_t i = 0; i < ops.size(); ++i) {
            const std::string ow = jw + ".operations[" + std::to_string(i) + "]";
            Operation op;
            op.job_id = static_cast<int>(j);
            op.op_index = static_cast<int>(i);
            const json &ps = field(ops[i], "part_sorting", ow);
            if (!ps.is_boolean()) throw ParseError(ow + ".part_sorting: expected a boolean");
            op.is_part_sorting = ps.get<bool>();
            const json &ms = array(ops[i], "machines", ow);
            for (std::size_t k = 0; k < ms.size(); ++k) {
                auto [mach, t] = int_pair(ms[k], ow + ".machines[" + std::to_string(k) + "]");
                op.compatible.push_back({mach, t});
            }
            job.operations.push_back(std::move(op));
        }
        inst.jobs.push_back(std::move(job));
    }
    require_valid(inst);
    return inst;
}

std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string &path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write to '" + path + "' failed");
}

void write_instance_file(const std::string &path, const Instance &inst) { write_text_file(path, save_instance(inst)); }

Instance read_instance_file(const std::string &path) {
    try {
        return load_instance(read_text_file(path));
    } catch (const ParseError &e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace fjsplb
