#include <array>
#include <string_view>

#include "greater/semantic.hpp"

namespace greater {

namespace {

constexpr std::array<std::string_view, 139> kGivenNames{
    "Aaron", "Abigail", "Adrian", "Alice", "Alma", "Amos", "Andrea", "Angus", "Arlo", "Astrid",
    "Audrey", "Basil", "Beatrice", "Bennett", "Bianca", "Blake", "Bonnie", "Boris", "Brenda",
    "Bruno", "Caleb", "Camille", "Carmen", "Cecil", "Celeste", "Chester", "Clara", "Clifford",
    "Colette", "Conrad", "Cora", "Cyrus", "Dahlia", "Damon", "Daphne", "Darius", "Delia", "Dexter",
    "Dolores", "Dorian", "Edgar", "Edith", "Elias", "Eloise", "Emery", "Enid", "Ernest", "Esther",
    "Evander", "Faye", "Felix", "Fern", "Fletcher", "Flora", "Floyd", "Frances", "Gideon",
    "Gilbert", "Gloria", "Gordon", "Greta", "Gus", "Harriet", "Hazel", "Hector", "Helena", "Homer",
    "Hugo", "Ida", "Imogen", "Ingrid", "Irving", "Isadora", "Ivan", "Jasper", "Joan", "Joel",
    "Josephine", "Julian", "Juniper", "Keith", "Lena", "Leon", "Leona", "Lionel", "Lorna", "Lucius",
    "Lydia", "Mabel", "Magnus", "Marcel", "Margot", "Marvin", "Matilda", "Maxine", "Milo", "Miriam",
    "Monroe", "Muriel", "Nadia", "Nestor", "Nina", "Noel", "Nora", "Octavia", "Odell", "Olive",
    "Orson", "Otis", "Pearl", "Percy", "Phoebe", "Quentin", "Quinn", "Rhoda", "Roland", "Rosalind",
    "Rufus", "Sabine", "Selma", "Silas", "Sybil", "Tabitha", "Thaddeus", "Thelma", "Tobias",
    "Ursula", "Vera", "Vernon", "Viola", "Wallace", "Wanda", "Walter", "Wilma", "Winston", "Xavier",
    "Yvette", "Zelda", "Zeke",
};

constexpr std::array<std::string_view, 67> kSurnames{
    "Abbott", "Acosta", "Aldridge", "Ashford", "Bancroft", "Barlow", "Beckett", "Bellamy",
    "Blackwood", "Booker", "Bramley", "Calloway", "Carrow", "Chadwick", "Clayborne", "Corrigan",
    "Crowley", "Dalton", "Delacroix", "Donnelly", "Dunmore", "Eastwood", "Ellery", "Everett",
    "Fairbanks", "Farrow", "Fennimore", "Galloway", "Garrison", "Goodwin", "Greaves", "Hadley",
    "Halloran", "Harrington", "Hawthorne", "Holloway", "Ingram", "Jessup", "Kendrick", "Kingsley",
    "Lockhart", "Lowell", "Lyndon", "Mallory", "Marchetti", "Merriweather", "Montague", "Norwood",
    "Oakley", "Pemberton", "Prescott", "Quimby", "Radcliffe", "Ransome", "Redfield", "Rowntree",
    "Salinger", "Sheffield", "Stanhope", "Thackeray", "Thornbury", "Underhill", "Vance",
    "Wakefield", "Whitlock", "Winslow", "Yardley",
};

}  // namespace

// Surname-major order so consecutive entries differ in the given name.
std::vector<std::string> default_name_pool() {
  std::vector<std::string> pool;
  pool.reserve(kGivenNames.size() * kSurnames.size());
  for (auto surname : kSurnames)
    for (auto given : kGivenNames) pool.push_back(std::string(given) + " " + std::string(surname));
  return pool;
}

}  // namespace greater
