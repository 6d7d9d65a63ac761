#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

namespace permem {

// The default 20-domain taxonomy.
inline const std::vector<std::string>& default_domain_pool() {
    static const std::vector<std::string> pool = {
        "Academic Study & Learning",
        "Business & Entrepreneurship",
        "Career Development & Job Search",
        "Data Analysis & Visualization",
        "Event Planning",
        "Health & Wellness",
        "Home & Real Estate",
        "Language Learning",
        "Legal & Administrative Affairs",
        "Math & Quantitative Problem Solving",
        "Mental Health & Emotional Support",
        "News & Current Events",
        "Personal Finance & Investment",
        "Recipe Advice & Meal Planning",
        "Relationship & Social Advice",
        "Shopping & Product Research",
        "Software Development & Coding",
        "Sport & Physical Activity",
        "Travel Planning",
        "Writing Assistant",
    };
    return pool;
}

class DomainPool {
public:
    DomainPool() : DomainPool(default_domain_pool()) {}
    explicit DomainPool(std::vector<std::string> names) : names_(std::move(names)) {}

    bool contains(std::string_view name) const {
        return std::find(names_.begin(), names_.end(), name) != names_.end();
    }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
};

}  // namespace permem
