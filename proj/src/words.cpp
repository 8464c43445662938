#include "rlab/data.hpp"

namespace rlab {

// General-domain word inventory. Most command words appear here too, so the
// command domain is largely in-vocabulary with a handful of new words.
const std::vector<std::string>& german_word_list() {
    static const std::vector<std::string> words = {
        "der", "die", "das", "und", "ist", "nicht", "ein", "eine", "ich", "du",
        "wir", "sie", "es", "im", "am", "auf", "aus", "an", "zu", "mit",
        "von", "für", "über", "unter", "vor", "nach", "bei", "um", "haus", "auto",
        "zeit", "tag", "jahr", "mann", "frau", "kind", "wasser", "licht", "musik", "fenster",
        "tür", "garten", "straße", "stadt", "land", "hand", "kopf", "herz", "buch", "tisch",
        "stuhl", "zimmer", "küche", "bad", "flur", "keller", "morgen", "abend", "nacht", "woche",
        "monat", "uhr", "minute", "stunde", "arbeit", "schule", "spiel", "film", "bild", "wort",
        "satz", "frage", "antwort", "freund", "leben", "welt", "himmel", "erde", "sonne", "mond",
        "stern", "regen", "schnee", "wind", "feuer", "luft", "berg", "tal", "fluss", "meer",
        "baum", "blume", "gras", "vogel", "fisch", "hund", "katze", "pferd", "brot", "milch",
        "käse", "apfel", "kuchen", "zucker", "salz", "suppe", "tee", "kaffee", "wein", "gut",
        "schlecht", "groß", "klein", "alt", "neu", "jung", "schnell", "langsam", "laut", "leise",
        "hell", "dunkel", "warm", "kalt", "schön", "bitte", "danke", "heute", "gestern", "wieder",
        "immer", "schon", "noch", "sehr", "hier", "dort", "oben", "unten", "schalte", "mach",
        "stelle", "öffne", "schließe", "spiele", "stoppe", "rufe", "zeige", "lese", "erhöhe",
        "verringere", "erinnere", "starte", "wohnzimmer", "schlafzimmer", "radio", "fernseher",
        "lautstärke", "wecker", "heizung", "termin", "termine", "nachrichten", "wetter",
        "tabletten", "hilfe", "tochter", "sohn", "arzt", "grad", "zwanzig", "acht", "sieben",
        "zehn", "lichter", "draußen", "wann", "was", "wie", "mir", "mich", "mein", "meine",
        "meinen", "beim", "den", "dem", "in", "alle", "alles", "viel", "spät", "heißt",
        "kommt", "gibt", "brauche", "wiederhole", "weiter", "guten", "gute", "ein",
    };
    return words;
}

// The 52 senior-voice-command sentences. A few words (rollläden, notruf,
// staubsauger, thermostat, kalender, mittagessen, timer, leiser, lauter,
// wärmer, kälter, zum) are deliberately absent from the general word list.
const std::vector<std::string>& command_templates() {
    static const std::vector<std::string> templates = {
        "schalte das licht im wohnzimmer an",
        "schalte das licht im schlafzimmer aus",
        "mach das radio an",
        "mach den fernseher aus",
        "wie spät ist es",
        "wie wird das wetter heute",
        "wie wird das wetter morgen",
        "rufe meine tochter an",
        "rufe meinen sohn an",
        "rufe den arzt an",
        "stelle einen wecker für acht uhr",
        "stelle einen wecker für sieben uhr",
        "erinnere mich an meine tabletten",
        "erinnere mich an den termin",
        "erhöhe die lautstärke",
        "verringere die lautstärke",
        "spiele meine musik",
        "stoppe die musik",
        "öffne die rollläden",
        "schließe die rollläden",
        "mach die heizung wärmer",
        "mach die heizung kälter",
        "zeige mir meine termine",
        "lese mir die nachrichten vor",
        "wie warm ist es draußen",
        "schalte alle lichter aus",
        "starte den staubsauger",
        "stoppe den staubsauger",
        "stelle das thermostat auf zwanzig grad",
        "zeige mir den kalender",
        "was gibt es zum mittagessen",
        "rufe den notruf an",
        "schalte das licht in der küche an",
        "schalte das licht im bad aus",
        "mach die musik leiser",
        "mach die musik lauter",
        "wann kommt meine tochter",
        "wann ist mein termin beim arzt",
        "stelle einen timer auf zehn minuten",
        "wie heißt du",
        "guten morgen",
        "gute nacht",
        "ich brauche hilfe",
        "bitte wiederhole das",
        "spiele das radio in der küche",
        "schließe das fenster im schlafzimmer",
        "öffne das fenster im wohnzimmer",
        "wie viel uhr ist es",
        "erinnere mich an das mittagessen",
        "schalte den fernseher im wohnzimmer ein",
        "lese mir das buch weiter vor",
        "danke das ist alles",
    };
    return templates;
}

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {"äh", "bitte", "mal", "doch"};
    return words;
}

}  // namespace rlab
