#include "fgsim/population.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fgsim/errors.hpp"

namespace fgsim {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string payload_to_text(const std::vector<Example>& examples, bool scalar) {
    std::string out;
    bool first_tok = true;
    auto append = [&](const std::string& s) {
        if (!first_tok) out += ' ';
        out += s;
        first_tok = false;
    };
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (scalar) {
            append(format_double(examples[i].scalar()));
        } else {
            if (i > 0) append("-1"); // sentence delimiter
            for (std::int32_t t : examples[i].tokens()) append(std::to_string(t));
        }
    }
    return out;
}

std::vector<Example> payload_from_text(const std::string& text, bool scalar,
                                       const std::string& path) {
    std::vector<Example> out;
    std::istringstream in(text);
    if (scalar) {
        double v;
        while (in >> v) out.push_back(Example::from_scalar(v));
    } else {
        TokenSequence current;
        long long t;
        while (in >> t) {
            if (t == -1) {
                out.push_back(Example::from_tokens(std::move(current)));
                current = TokenSequence{};
            } else {
                current.push_back(static_cast<std::int32_t>(t));
            }
        }
        if (!current.empty()) out.push_back(Example::from_tokens(std::move(current)));
    }
    if (!in.eof() && in.fail())
        throw PersistenceError("load_population: malformed payload in " + path);
    return out;
}

} // namespace

Population Population::from_clients(std::vector<ClientRecord> clients, int vocab_size) {
    Population pop;
    pop.clients = std::move(clients);
    pop.vocab_size = vocab_size;
    std::sort(pop.clients.begin(), pop.clients.end(),
              [](const ClientRecord& a, const ClientRecord& b) { return a.client_id < b.client_id; });
    for (const ClientRecord& c : pop.clients) pop.groups[c.group_id].push_back(c.client_id);
    for (auto& [gid, ids] : pop.groups) std::sort(ids.begin(), ids.end());
    pop.validate();
    return pop;
}

const ClientRecord& Population::client(const std::string& client_id) const {
    auto it = std::lower_bound(clients.begin(), clients.end(), client_id,
                               [](const ClientRecord& c, const std::string& id) {
                                   return c.client_id < id;
                               });
    if (it == clients.end() || it->client_id != client_id)
        throw ContractViolation("Population: unknown client " + client_id);
    return *it;
}

bool Population::has_client(const std::string& client_id) const {
    auto it = std::lower_bound(clients.begin(), clients.end(), client_id,
                               [](const ClientRecord& c, const std::string& id) {
                                   return c.client_id < id;
                               });
    return it != clients.end() && it->client_id == client_id;
}

void Population::validate() const {
    if (clients.empty()) throw ContractViolation("Population: no clients");
    std::set<std::string> seen;
    for (const ClientRecord& c : clients) {
        if (!seen.insert(c.client_id).second)
            throw ContractViolation("Population: duplicate client id " + c.client_id);
        if (c.group_id.empty())
            throw ContractViolation("Population: client " + c.client_id + " has no group");
        if (c.train_examples.empty())
            throw ContractViolation("Population: client " + c.client_id + " has no training data");
    }
    std::size_t grouped = 0;
    for (const auto& [gid, ids] : groups) {
        if (ids.empty()) throw ContractViolation("Population: empty group " + gid);
        for (const std::string& id : ids) {
            if (client(id).group_id != gid)
                throw ContractViolation("Population: client " + id + " listed under wrong group");
        }
        grouped += ids.size();
    }
    if (grouped != clients.size())
        throw ContractViolation("Population: groups do not partition the client set");
}

void save_population(const Population& pop, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PersistenceError("save_population: cannot open " + path);
    out << "#fgsim-population v1 vocab_size=" << pop.vocab_size << "\n";
    for (const ClientRecord& c : pop.clients) {
        const bool scalar = !c.train_examples.empty() && c.train_examples.front().is_scalar();
        out << c.client_id << '\t' << c.group_id << '\t' << (scalar ? "scalar" : "tokens") << '\t'
            << payload_to_text(c.train_examples, scalar) << '\t'
            << payload_to_text(c.eval_examples, scalar) << '\n';
    }
    out.flush();
    if (!out) throw PersistenceError("save_population: write failed for " + path);
}

Population load_population(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PersistenceError("load_population: cannot open " + path);
    std::string header;
    std::getline(in, header);
    if (header.rfind("#fgsim-population v1", 0) != 0)
        throw PersistenceError("load_population: bad header in " + path);
    int vocab_size = 0;
    if (auto pos = header.find("vocab_size="); pos != std::string::npos)
        vocab_size = std::atoi(header.c_str() + pos + 11);

    std::vector<ClientRecord> clients;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                cols.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cols.size() != 5)
            throw PersistenceError("load_population: expected 5 columns at " + path + ":" +
                                   std::to_string(lineno));
        const bool scalar = cols[2] == "scalar";
        if (!scalar && cols[2] != "tokens")
            throw PersistenceError("load_population: unknown kind '" + cols[2] + "' at " + path +
                                   ":" + std::to_string(lineno));
        ClientRecord rec;
        rec.client_id = cols[0];
        rec.group_id = cols[1];
        rec.train_examples = payload_from_text(cols[3], scalar, path);
        rec.eval_examples = payload_from_text(cols[4], scalar, path);
        clients.push_back(std::move(rec));
    }
    return Population::from_clients(std::move(clients), vocab_size);
}

} // namespace fgsim
