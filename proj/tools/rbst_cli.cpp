#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "rbst/rbst.hpp"

namespace {

using namespace rbst;

struct Options {
    std::vector<unsigned> alphas{2};
    std::vector<double> epsilons{0.5};
    double c_rho = 108.0;
    std::vector<std::uint64_t> ns{10000};
    unsigned trials = 30;
    Seed seed = 1;
    std::string out;
    std::string image;
    bool no_buffering = false;
    bool quick = false;
    bool create = false;
    unsigned demo_alpha = 2;
    double demo_eps = 0.5;
    std::vector<std::string> action;
};

ExperimentConfig config_of(const Options& o) {
    ExperimentConfig cfg;
    cfg.alphas = o.alphas;
    cfg.epsilons = o.epsilons;
    cfg.c_rho = o.c_rho;
    cfg.ns = o.ns;
    cfg.trials = o.trials;
    cfg.seed_base = o.seed;
    cfg.buffering = !o.no_buffering;
    return cfg;
}

int emit(const std::vector<BoundReport>& rows, const Options& o) {
    if (o.out.empty()) {
        std::cout << to_csv(rows);
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw Error(Errc::not_found, "cannot open " + o.out + " for writing");
        f << to_csv(rows);
        std::cout << to_table(rows);
    }
    for (const auto& r : rows)
        if (!r.pass) return 1;
    return 0;
}

int run_verify(const Options& o) {
    UrGridConfig ur;
    ur.seed = o.seed;
    ur.rhos = {0, 1, 2, 4};
    ur.cases = o.quick ? 200 : 800;
    ur.max_n = o.quick ? 48 : 64;
    std::vector<SuiteResult> suites;
    suites.push_back(ur_grid(ur));
    suites.push_back(treap_grid(o.quick ? 50 : 200, 100, o.seed + 1));
    suites.push_back(size_examples(3));
    suites.push_back(section_tail_sweep(12, 4));
    suites.push_back(bracketing_sweep(12, 5));
    suites.push_back(list_nonfull(o.quick ? 6 : 7));
    std::cout << format_suites(suites);
    for (const auto& s : suites)
        if (!s.ok()) return 1;
    return 0;
}

Key parse_key(const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty() || s[0] == '-') throw CLI::ValidationError("key", "not a decimal key: " + s);
    return v;
}

int run_demo(const Options& o) {
    const auto& a = o.action;
    std::size_t want = a.empty() ? 0 : a[0] == "range" ? 3 : 2;
    bool known = !a.empty() && (a[0] == "insert" || a[0] == "delete" || a[0] == "successor" || a[0] == "range");
    if (!known || a.size() != want)
        throw CLI::ValidationError("action", "expected: insert K | delete K | successor Q | range LO HI");
    std::vector<Key> args;
    for (std::size_t i = 1; i < a.size(); ++i) args.push_back(parse_key(a[i]));

    std::optional<Tree> t;
    if (std::filesystem::exists(o.image)) {
        t.emplace(Tree::from_store(BlockStore::load_image(o.image)));
    } else if (o.create) {
        Params p = o.no_buffering ? Params::unbuffered(o.demo_alpha) : Params::make(o.demo_alpha, o.demo_eps, o.c_rho);
        t.emplace(p, PrioritySource(o.seed));
    } else {
        throw Error(Errc::not_found, "image " + o.image + " does not exist (use --create)");
    }

    if (a[0] == "insert" || a[0] == "delete") {
        UpdateReceipt rc = a[0] == "insert" ? insert(*t, args[0]) : erase(*t, args[0]);
        t->store().save_image(o.image);
        std::cout << (a[0] == "insert" ? "inserted " : "deleted ") << args[0] << " case=" << case_name(rc.plan.tag)
                  << " m=" << rc.m << " m_prime=" << rc.m_prime << " reads=" << rc.reads << " writes=" << rc.writes
                  << " d_prime=" << rc.d_prime << "\n";
        return 0;
    }
    if (a[0] == "successor") {
        auto s = t->successor(args[0]);
        if (!s) {
            std::cerr << "not-found: no key >= " << args[0] << "\n";
            return 1;
        }
        std::cout << *s << "\n";
        return 0;
    }
    for (Key k : t->range_report(args[0], args[1])) std::cout << k << "\n";
    return 0;
}

int run_dump(const Options& o) {
    Tree t = Tree::from_store(BlockStore::load_image(o.image));
    const BlockStore& s = t.store();
    std::cout << "alpha " << s.alpha() << "\nrho " << s.rho() << "\nseed " << s.seed() << "\nn " << s.n() << "\nroot ";
    if (t.root()) std::cout << *t.root();
    else std::cout << "-";
    std::cout << "\nblocks " << s.size() << "\n";
    std::vector<Key> stack;
    if (t.root()) stack.push_back(*t.root());
    while (!stack.empty()) {
        Key label = stack.back();
        stack.pop_back();
        Pinned b(t.store(), label);
        std::cout << std::string(2 * b->depth, ' ') << "[" << label << "] keys";
        for (Key k : b->keys) std::cout << " " << k;
        std::cout << " | fanout " << b->fanout << " weight " << b->weight() << "\n";
        for (std::size_t i = b->slots.size(); i-- > 0;)
            if (b->slots[i]) stack.push_back(b->slots[i]->label);
    }
    auto rep = t.check_invariants();
    if (!rep.ok()) {
        std::cerr << rep.to_string();
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Uniquely represented randomized block search trees: verification, benchmarks and a demo store"};
    app.require_subcommand(1);

    auto experiment = [&](CLI::App* sc) {
        sc->add_option("--alpha", o.alphas, "block capacity (comma-separated list)")->delimiter(',');
        sc->add_option("--eps", o.epsilons, "buffer parameter in (0, 1/2] (comma-separated list)")->delimiter(',');
        sc->add_option("--c-rho", o.c_rho, "rho = ceil(c_rho * alpha / eps)");
        sc->add_option("--n", o.ns, "key counts (comma-separated list)")->delimiter(',');
        sc->add_option("--trials", o.trials, "seeds per configuration");
        sc->add_option("--seed", o.seed, "base seed");
        sc->add_option("--out", o.out, "write CSV here and print a table instead");
        sc->add_flag("--no-buffering", o.no_buffering, "beta = 0: fan-out alpha+1 everywhere");
    };

    auto* verify = app.add_subcommand("verify", "unique-representation grid and exact enumeration suites");
    verify->add_flag("--quick", o.quick, "smaller grids");
    verify->add_option("--seed", o.seed, "base seed");

    auto* depth = app.add_subcommand("bench-depth", "search depth of unsuccessful queries");
    auto* size = app.add_subcommand("bench-size", "block counts and load factor");
    auto* updates = app.add_subcommand("bench-updates", "I/O per update under churn");
    for (auto* sc : {depth, size, updates}) experiment(sc);

    auto* demo = app.add_subcommand("demo", "insert | delete | successor | range against an image file");
    demo->add_option("--image", o.image, "store image path")->required();
    demo->add_flag("--create", o.create, "start an empty store if the image is missing");
    demo->add_option("--alpha", o.demo_alpha, "block capacity for --create");
    demo->add_option("--eps", o.demo_eps, "buffer parameter for --create");
    demo->add_option("--c-rho", o.c_rho, "rho constant for --create");
    demo->add_option("--seed", o.seed, "priority seed for --create");
    demo->add_flag("--no-buffering", o.no_buffering, "beta = 0 for --create");
    demo->add_option("action", o.action, "insert K | delete K | successor Q | range LO HI")->required();

    auto* dump = app.add_subcommand("dump", "pretty-print an image");
    dump->add_option("--image", o.image, "store image path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*verify) return run_verify(o);
        if (*depth) return emit(bench_depth(config_of(o)), o);
        if (*size) return emit(bench_size(config_of(o)), o);
        if (*updates) return emit(bench_updates(config_of(o)), o);
        if (*demo) return run_demo(o);
        if (*dump) return run_dump(o);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == Errc::config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
